// AVX2/FMA variants of the inner-loop kernels. Compiled with -mavx2 -mfma;
// only executed when runtime dispatch has confirmed CPU support.

#include "cnet/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace cnet::simd {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// 4x8 register tile: 8 accumulators, B rows streamed once per tile.
void gemm_nn_avx2(int m, int n, int k, const double* a, const double* b, double* c) {
    const int m4 = m & ~3;
    const int n8 = n & ~7;
    for (int i = 0; i < m4; i += 4) {
        const double* a0 = a + static_cast<long>(i) * k;
        const double* a1 = a0 + k;
        const double* a2 = a1 + k;
        const double* a3 = a2 + k;
        double* c0 = c + static_cast<long>(i) * n;
        double* c1 = c0 + n;
        double* c2 = c1 + n;
        double* c3 = c2 + n;
        for (int j = 0; j < n8; j += 8) {
            __m256d s00 = _mm256_loadu_pd(c0 + j), s01 = _mm256_loadu_pd(c0 + j + 4);
            __m256d s10 = _mm256_loadu_pd(c1 + j), s11 = _mm256_loadu_pd(c1 + j + 4);
            __m256d s20 = _mm256_loadu_pd(c2 + j), s21 = _mm256_loadu_pd(c2 + j + 4);
            __m256d s30 = _mm256_loadu_pd(c3 + j), s31 = _mm256_loadu_pd(c3 + j + 4);
            for (int p = 0; p < k; ++p) {
                const double* bp = b + static_cast<long>(p) * n + j;
                const __m256d b0 = _mm256_loadu_pd(bp);
                const __m256d b1 = _mm256_loadu_pd(bp + 4);
                __m256d av = _mm256_broadcast_sd(a0 + p);
                s00 = _mm256_fmadd_pd(av, b0, s00);
                s01 = _mm256_fmadd_pd(av, b1, s01);
                av = _mm256_broadcast_sd(a1 + p);
                s10 = _mm256_fmadd_pd(av, b0, s10);
                s11 = _mm256_fmadd_pd(av, b1, s11);
                av = _mm256_broadcast_sd(a2 + p);
                s20 = _mm256_fmadd_pd(av, b0, s20);
                s21 = _mm256_fmadd_pd(av, b1, s21);
                av = _mm256_broadcast_sd(a3 + p);
                s30 = _mm256_fmadd_pd(av, b0, s30);
                s31 = _mm256_fmadd_pd(av, b1, s31);
            }
            _mm256_storeu_pd(c0 + j, s00);
            _mm256_storeu_pd(c0 + j + 4, s01);
            _mm256_storeu_pd(c1 + j, s10);
            _mm256_storeu_pd(c1 + j + 4, s11);
            _mm256_storeu_pd(c2 + j, s20);
            _mm256_storeu_pd(c2 + j + 4, s21);
            _mm256_storeu_pd(c3 + j, s30);
            _mm256_storeu_pd(c3 + j + 4, s31);
        }
        for (int r = 0; r < 4; ++r) {
            const double* ar = a + static_cast<long>(i + r) * k;
            double* cr = c + static_cast<long>(i + r) * n;
            for (int j = n8; j < n; ++j) {
                double acc = cr[j];
                for (int p = 0; p < k; ++p) acc += ar[p] * b[static_cast<long>(p) * n + j];
                cr[j] = acc;
            }
        }
    }
    for (int i = m4; i < m; ++i) {
        const double* ai = a + static_cast<long>(i) * k;
        double* ci = c + static_cast<long>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double* bp = b + static_cast<long>(p) * n;
            const __m256d av = _mm256_set1_pd(ai[p]);
            int j = 0;
            for (; j + 4 <= n; j += 4) {
                _mm256_storeu_pd(ci + j, _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + j), _mm256_loadu_pd(ci + j)));
            }
            for (; j < n; ++j) ci[j] += ai[p] * bp[j];
        }
    }
}

void gemm_nt_avx2(int m, int n, int k, const double* a, const double* b, double* c) {
    const int k8 = k & ~7;
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<long>(i) * k;
        double* ci = c + static_cast<long>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + static_cast<long>(j) * k;
            __m256d v0 = _mm256_setzero_pd();
            __m256d v1 = _mm256_setzero_pd();
            for (int p = 0; p < k8; p += 8) {
                v0 = _mm256_fmadd_pd(_mm256_loadu_pd(ai + p), _mm256_loadu_pd(bj + p), v0);
                v1 = _mm256_fmadd_pd(_mm256_loadu_pd(ai + p + 4), _mm256_loadu_pd(bj + p + 4), v1);
            }
            double acc = hsum(_mm256_add_pd(v0, v1));
            for (int p = k8; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] += acc;
        }
    }
}

void axpy_avx2(int n, double alpha, const double* x, double* y) {
    const __m256d av = _mm256_set1_pd(alpha);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_avx2(int n, const double* a, const double* b, double* out) {
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void relu_avx2(int n, const double* x, double* out) {
    const __m256d zero = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

double dot_avx2(int n, const double* a, const double* b) {
    __m256d v0 = _mm256_setzero_pd();
    __m256d v1 = _mm256_setzero_pd();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        v0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), v0);
        v1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), v1);
    }
    double acc = hsum(_mm256_add_pd(v0, v1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

const Ops* avx2_ops() {
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
    static const Ops t{gemm_nn_avx2, gemm_nt_avx2, axpy_avx2, add_avx2, relu_avx2, dot_avx2};
    return &t;
}

}  // namespace cnet::simd

#else

namespace cnet::simd {
const Ops* avx2_ops() { return nullptr; }
}  // namespace cnet::simd

#endif
