#include "cnet/simd.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace cnet::simd {
namespace {

Isa pick_default() {
    if (const char* env = std::getenv("CNET_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
        if (std::strcmp(env, "avx2") == 0 && avx2_ops()) return Isa::avx2;
        if (std::strcmp(env, "neon") == 0 && neon_ops()) return Isa::neon;
        return Isa::scalar;
    }
    if (avx2_ops()) return Isa::avx2;
    if (neon_ops()) return Isa::neon;
    return Isa::scalar;
}

Isa g_isa = pick_default();

}  // namespace

const Ops& ops() {
    switch (g_isa) {
        case Isa::avx2: return *avx2_ops();
        case Isa::neon: return *neon_ops();
        default: return scalar_ops();
    }
}

Isa active_isa() { return g_isa; }

void force_isa(Isa isa) {
    if (isa == Isa::avx2 && !avx2_ops()) throw std::runtime_error("simd: AVX2 not available");
    if (isa == Isa::neon && !neon_ops()) throw std::runtime_error("simd: NEON not available");
    g_isa = isa;
}

std::string isa_name(Isa isa) {
    switch (isa) {
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
        default: return "scalar";
    }
}

}  // namespace cnet::simd
