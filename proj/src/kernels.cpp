#include "cbsim/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace cbsim::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double sum = (s0 + s1) + (s2 + s3);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void welford(const double* x, double* mean, double* m2, double count, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double delta = x[i] - mean[i];
        mean[i] += delta / count;
        m2[i] += delta * (x[i] - mean[i]);
    }
}

}  // namespace scalar

namespace {

constexpr KernelTable kScalar{Isa::scalar, &scalar::dot, &scalar::axpy, &scalar::welford};
#if defined(CBSIM_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2, &avx2::dot, &avx2::axpy, &avx2::welford};
#endif

const KernelTable* initial_table() noexcept {
    const char* env = std::getenv("CBSIM_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return &kScalar;
#if defined(CBSIM_HAVE_AVX2)
    if (avx2_available()) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const KernelTable*>& table() noexcept {
    static std::atomic<const KernelTable*> t{initial_table()};
    return t;
}

}  // namespace

bool avx2_available() noexcept {
#if defined(CBSIM_HAVE_AVX2)
    static const bool ok = __builtin_cpu_supports("avx2");
    return ok;
#else
    return false;
#endif
}

const KernelTable& active() noexcept { return *table().load(std::memory_order_acquire); }

bool select(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar:
            table().store(&kScalar, std::memory_order_release);
            return true;
        case Isa::avx2:
#if defined(CBSIM_HAVE_AVX2)
            if (avx2_available()) {
                table().store(&kAvx2, std::memory_order_release);
                return true;
            }
#endif
            return false;
    }
    return false;
}

std::string_view isa_name(Isa isa) noexcept {
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

}  // namespace cbsim::kernels
