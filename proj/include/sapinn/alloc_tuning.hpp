// Long training loops cycle many multi-megabyte matrices; raising the malloc
// mmap threshold keeps those buffers on the heap free lists instead of
// round-tripping through mmap. Call once at process start.
#pragma once

#if defined(__gnu_linux__)
#include <malloc.h>
#endif

namespace sapinn {

inline void tune_allocator() {
#if defined(__gnu_linux__)
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
#endif
}

} // namespace sapinn
