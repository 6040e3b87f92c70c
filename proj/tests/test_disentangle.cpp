// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "fdv/disentangle.hpp"
#include "fdv/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace fdv;

namespace {

PairBatch batch_from(const Matrix& left, const Matrix& right, std::vector<bool> same) {
  PairBatch b;
  b.kind = same.front() ? PairKind::GG : PairKind::GF;
  b.left = left;
  b.right = right;
  b.same_label = std::move(same);
  return b;
}

LatentGaussian lg2(double m0, double m1, double s0, double s1) {
  LatentGaussian g;
  g.mu = Vector(2);
  g.mu << m0, m1;
  g.sigma = Vector(2);
  g.sigma << s0, s1;
  return g;
}

}  // namespace

TEST(GaussDistance, Examples) {
  const LatentGaussian a = lg2(1, 0, 0.5, 0.7), b = lg2(0, 0, 0.5, 0.7);
  EXPECT_EQ(gauss_distance(a, a), 0.0);
  EXPECT_EQ(gauss_distance(a, b), 1.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int k = 0; k < 20; ++k) {
    const LatentGaussian x = lg2(n(rng), n(rng), std::exp(n(rng)), std::exp(n(rng)));
    const LatentGaussian y = lg2(n(rng), n(rng), std::exp(n(rng)), std::exp(n(rng)));
    EXPECT_EQ(gauss_distance(x, y), gauss_distance(y, x));
  }
  LatentGaussian c;
  c.mu = Vector::Zero(3);
  c.sigma = Vector::Ones(3);
  EXPECT_THROW(gauss_distance(a, c), UsageError);
}

TEST(FdPairLoss, PiecewiseTable) {
  const Margin m(1.0);
  EXPECT_LE(std::abs(fd_pair_loss(0.3, true, m) - 0.3), 1e-12);
  EXPECT_LE(std::abs(fd_pair_loss(0.3, false, m) - 0.7), 1e-12);
  EXPECT_LE(std::abs(fd_pair_loss(1.5, false, m) - 1.0), 1e-12);
  EXPECT_EQ(fd_pair_slope(1.5, false, m), 0.0);
  EXPECT_EQ(fd_pair_slope(1.0, false, m), 0.0);  // kink belongs to the flat branch
  EXPECT_EQ(fd_pair_slope(0.3, false, m), -1.0);
  EXPECT_EQ(fd_pair_slope(0.3, true, m), 1.0);
}

TEST(FdPairLoss, RandomCasesMatchBranchOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int k = 0; k < 20; ++k) {
    const double d = u(rng), mv = 0.1 + u(rng);
    const bool same = k % 3 == 0;
    EXPECT_LE(std::abs(fd_pair_loss(d, same, Margin(mv)) - oracle::pair_loss(d, same, mv)), 1e-12);
  }
}

TEST(Margin, MustBePositive) {
  EXPECT_THROW(Margin(0.0), UsageError);
  EXPECT_THROW(Margin(-1.0), UsageError);
  EXPECT_NO_THROW(Margin(1e-9));
}

TEST(FdBatchLoss, IdenticalSamePairsGiveZero) {
  const VaeModel m = fixtures::tiny_model(9, 5, 2, 1);
  const Matrix x = fixtures::unit_inputs(4, 9, 2);
  const LossAndGrads r = fd_batch_loss(m, batch_from(x, x, {true, true, true, true}), Margin(1.0));
  EXPECT_EQ(r.loss, 0.0);
  for (double g : r.grads.flatten()) EXPECT_EQ(g, 0.0);
}

TEST(FdBatchLoss, EqualsMeanOfPairLosses) {
  const VaeModel m = fixtures::tiny_model(10, 5, 2, 3);
  const Matrix l = fixtures::unit_inputs(6, 10, 4), r = fixtures::unit_inputs(6, 10, 5);
  const std::vector<bool> same{true, false, true, false, false, true};
  const double mv = 0.05;
  const LossAndGrads got = fd_batch_loss(m, batch_from(l, r, same), Margin(mv));
  double want = 0.0;
  for (int k = 0; k < 6; ++k) {
    const LatentGaussian a = encode(m, std::span<const double>(l.data() + k * 10, 10));
    const LatentGaussian b = encode(m, std::span<const double>(r.data() + k * 10, 10));
    want += oracle::pair_loss(gauss_distance(a, b), same[static_cast<std::size_t>(k)], mv);
  }
  EXPECT_LE(std::abs(got.loss - want / 6.0), 1e-12);
}

TEST(FdBatchLoss, DecoderGradientIsZero) {
  const VaeModel m = fixtures::tiny_model(9, 5, 2, 6);
  const Matrix l = fixtures::unit_inputs(3, 9, 7), r = fixtures::unit_inputs(3, 9, 8);
  const LossAndGrads g = fd_batch_loss(m, batch_from(l, r, {true, false, true}), Margin(10.0));
  for (std::size_t i = m.decoder_begin(); i < g.grads.layers.size(); ++i) {
    EXPECT_EQ(g.grads.layers[i].weight.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.grads.layers[i].bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(FdBatchLoss, FlatBranchHasZeroGradient) {
  const VaeModel m = fixtures::tiny_model(9, 5, 2, 9);
  const Matrix l = fixtures::unit_inputs(3, 9, 10), r = fixtures::unit_inputs(3, 9, 11);
  // Tiny margin: every different-label pair is past it.
  const LossAndGrads g = fd_batch_loss(m, batch_from(l, r, {false, false, false}), Margin(1e-12));
  EXPECT_EQ(g.loss, 1e-12);
  for (double v : g.grads.flatten()) EXPECT_EQ(v, 0.0);
}

TEST(FdBatchLoss, GradientMatchesFiniteDifferenceAcrossBranches) {
  for (int k = 0; k < 5; ++k) {
    const int input = 9 + k;
    const VaeModel m = fixtures::tiny_model(input, 5, 2, 40 + k);
    const Matrix l = fixtures::unit_inputs(6, input, 50 + k), r = fixtures::unit_inputs(6, input, 60 + k);
    const std::vector<bool> same{true, true, false, false, false, false};
    std::vector<double> d;
    for (int p = 2; p < 6; ++p) {
      d.push_back(gauss_distance(encode(m, std::span<const double>(l.data() + p * input, input)),
                                 encode(m, std::span<const double>(r.data() + p * input, input))));
    }
    std::sort(d.begin(), d.end());
    const Margin mg(0.5 * (d[1] + d[2]));  // two pairs below, two above
    const PairBatch b = batch_from(l, r, same);
    const LossAndGrads g = fd_batch_loss(m, b, mg);
    auto f = [&](const std::vector<double>& p) {
      VaeModel mm = m;
      mm.params.assign_flat(p);
      return fd_batch_loss(mm, b, mg).loss;
    };
    const auto num = oracle::numeric_gradient(f, m.params.flatten(), 1e-6);
    EXPECT_LE(oracle::max_rel_err(fixtures::flat(g.grads), num), 1e-5) << "instance " << k;
  }
}

TEST(FdBatchLoss, SmallStepShrinksSamePairDistance) {
  for (int k = 0; k < 5; ++k) {
    VaeModel m = fixtures::tiny_model(12, 5, 2, 70 + k);
    const Matrix l = fixtures::unit_inputs(4, 12, 80 + k), r = fixtures::unit_inputs(4, 12, 90 + k);
    const PairBatch b = batch_from(l, r, {true, true, true, true});
    const LossAndGrads before = fd_batch_loss(m, b, Margin(1.0));
    m.params.axpy(-1e-4, before.grads);
    EXPECT_LT(fd_batch_loss(m, b, Margin(1.0)).loss, before.loss);
  }
}

TEST(FdBatchLoss, EmptyBatchThrows) {
  const VaeModel m = fixtures::tiny_model(9, 5, 2, 1);
  PairBatch b;
  b.left.resize(0, 9);
  b.right.resize(0, 9);
  EXPECT_THROW(fd_batch_loss(m, b, Margin(1.0)), UsageError);
}
