// SPDX-License-Identifier: Apache-2.0
#include "fdv/runtime.hpp"

#if __has_include(<malloc.h>)
#include <malloc.h>
#endif

namespace fdv {

void tune_allocator() {
#if defined(__GLIBC__) && defined(M_MMAP_THRESHOLD)
  // Batch matrices are a few hundred KB; with the default dynamic thresholds
  // each one is an mmap/munmap pair.
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
#endif
}

}  // namespace fdv
