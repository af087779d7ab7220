#pragma once

#include <string>

namespace cnet::simd {

enum class Isa { scalar, avx2, neon };

// Dispatch table for the hot inner loops. All matrices are row-major and
// densely packed. gemm_nn/gemm_nt accumulate into C (callers pre-fill C
// with zeros or bias).
struct Ops {
    // C[MxN] += A[MxK] * B[KxN]
    void (*gemm_nn)(int m, int n, int k, const double* a, const double* b, double* c);
    // C[MxN] += A[MxK] * B[NxK]^T   (rows of A dotted with rows of B)
    void (*gemm_nt)(int m, int n, int k, const double* a, const double* b, double* c);
    // y += alpha * x
    void (*axpy)(int n, double alpha, const double* x, double* y);
    // out = a + b
    void (*add)(int n, const double* a, const double* b, double* out);
    // out = max(x, 0)
    void (*relu)(int n, const double* x, double* out);
    double (*dot)(int n, const double* a, const double* b);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when unsupported by CPU or build
const Ops* neon_ops();

// Active table, chosen at startup from CPU capabilities; CNET_SIMD=scalar|avx2|neon
// overrides. force_isa switches at runtime (throws if unavailable).
const Ops& ops();
Isa active_isa();
void force_isa(Isa isa);
std::string isa_name(Isa isa);

}  // namespace cnet::simd
