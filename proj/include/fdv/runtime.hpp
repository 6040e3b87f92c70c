// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace fdv {

// Keeps freed training buffers in the heap instead of returning them to the
// kernel after every step. No-op outside glibc.
void tune_allocator();

}  // namespace fdv
