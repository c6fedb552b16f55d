#include <cstdlib>
#include <string>

#include "litqa/kernels/kernels.hpp"

namespace litqa::kernels {

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "scalar";
}

const KernelTable* avx2_kernels() {
#if defined(LITQA_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    static const bool supported = __builtin_cpu_supports("avx2") != 0;
    return supported ? detail::avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& table = [&]() -> const KernelTable& {
        const char* force = std::getenv("LITQA_KERNELS");
        if (force && std::string(force) == "scalar") return scalar_kernels();
        if (const KernelTable* t = avx2_kernels()) return *t;
        return scalar_kernels();
    }();
    return table;
}

}  // namespace litqa::kernels
