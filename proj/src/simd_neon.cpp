// NEON variants for aarch64. float64x2 lanes, same contracts as the
// scalar reference kernels.

#include "cnet/simd.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace cnet::simd {
namespace {

void gemm_nn_neon(int m, int n, int k, const double* a, const double* b, double* c) {
    const int n4 = n & ~3;
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<long>(i) * k;
        double* ci = c + static_cast<long>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double* bp = b + static_cast<long>(p) * n;
            const float64x2_t av = vdupq_n_f64(ai[p]);
            int j = 0;
            for (; j < n4; j += 4) {
                vst1q_f64(ci + j, vfmaq_f64(vld1q_f64(ci + j), av, vld1q_f64(bp + j)));
                vst1q_f64(ci + j + 2, vfmaq_f64(vld1q_f64(ci + j + 2), av, vld1q_f64(bp + j + 2)));
            }
            for (; j < n; ++j) ci[j] += ai[p] * bp[j];
        }
    }
}

double dot_neon(int n, const double* a, const double* b) {
    float64x2_t v0 = vdupq_n_f64(0.0);
    float64x2_t v1 = vdupq_n_f64(0.0);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        v0 = vfmaq_f64(v0, vld1q_f64(a + i), vld1q_f64(b + i));
        v1 = vfmaq_f64(v1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(v0, v1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void gemm_nt_neon(int m, int n, int k, const double* a, const double* b, double* c) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<long>(i) * k;
        double* ci = c + static_cast<long>(i) * n;
        for (int j = 0; j < n; ++j) ci[j] += dot_neon(k, ai, b + static_cast<long>(j) * k);
    }
}

void axpy_neon(int n, double alpha, const double* x, double* y) {
    const float64x2_t av = vdupq_n_f64(alpha);
    int i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_neon(int n, const double* a, const double* b, double* out) {
    int i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void relu_neon(int n, const double* x, double* out) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    int i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vmaxq_f64(vld1q_f64(x + i), zero));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace

const Ops* neon_ops() {
    static const Ops t{gemm_nn_neon, gemm_nt_neon, axpy_neon, add_neon, relu_neon, dot_neon};
    return &t;
}

}  // namespace cnet::simd

#else

namespace cnet::simd {
const Ops* neon_ops() { return nullptr; }
}  // namespace cnet::simd

#endif
