#include "kernels_impl.hpp"

#include <cstdlib>
#include <string_view>

namespace cglp::kernels {

namespace {

constexpr KernelTable kScalar{
    "scalar",
    detail::sum_squares_scalar,
    detail::dot2_scalar,
    detail::window_demean_scalar,
    detail::accumulate_power_scalar,
    detail::eval_poly_jw_scalar,
};

#if defined(CGLP_HAVE_AVX2)
constexpr KernelTable kAvx2{
    "avx2",
    detail::sum_squares_avx2,
    detail::dot2_avx2,
    detail::window_demean_avx2,
    detail::accumulate_power_avx2,
    detail::eval_poly_jw_avx2,
};

bool cpu_has_avx2() {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

bool forced_scalar() {
    const char* env = std::getenv("CGLP_SIMD");
    return env != nullptr && std::string_view(env) == "scalar";
}

}  // namespace

const KernelTable& scalar() { return kScalar; }

const KernelTable* avx2() {
#if defined(CGLP_HAVE_AVX2)
    static const bool available = cpu_has_avx2();
    return available ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& table = []() -> const KernelTable& {
        if (!forced_scalar()) {
            if (const KernelTable* t = avx2()) return *t;
        }
        return kScalar;
    }();
    return table;
}

}  // namespace cglp::kernels
