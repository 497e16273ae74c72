#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace hashct {

/// Training reallocates multi-megabyte activation matrices every step. With
/// glibc's defaults these go through mmap/munmap and page faults dominate, so
/// executables raise the mmap and trim thresholds once at startup.
inline void keep_large_allocations_on_heap() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

}  // namespace hashct
