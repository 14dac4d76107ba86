// Vectorized elementwise sin/cos. Uses the glibc vector math functions on
// x86-64 when available; falls back to the scalar library otherwise.
#pragma once

#include <cmath>
#include <cstddef>

#if defined(__AVX2__) && defined(__gnu_linux__)
#define SAPINN_HAVE_MVEC 1
#include <immintrin.h>
extern "C" {
__m256d _ZGVdN4v_sin(__m256d);
__m256d _ZGVdN4v_cos(__m256d);
}
#endif

namespace sapinn::simd {

inline void sincos_array(const double* x, double* s, double* c, std::size_t n) {
#ifdef SAPINN_HAVE_MVEC
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(s + i, _ZGVdN4v_sin(v));
        _mm256_storeu_pd(c + i, _ZGVdN4v_cos(v));
    }
    for (; i < n; ++i) {
        s[i] = std::sin(x[i]);
        c[i] = std::cos(x[i]);
    }
#else
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = std::sin(x[i]);
        c[i] = std::cos(x[i]);
    }
#endif
}

inline void sin_array(const double* x, double* s, std::size_t n) {
#ifdef SAPINN_HAVE_MVEC
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(s + i, _ZGVdN4v_sin(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) s[i] = std::sin(x[i]);
#else
    for (std::size_t i = 0; i < n; ++i) s[i] = std::sin(x[i]);
#endif
}

inline void cos_array(const double* x, double* c, std::size_t n) {
#ifdef SAPINN_HAVE_MVEC
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(c + i, _ZGVdN4v_cos(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) c[i] = std::cos(x[i]);
#else
    for (std::size_t i = 0; i < n; ++i) c[i] = std::cos(x[i]);
#endif
}

} // namespace sapinn::simd
