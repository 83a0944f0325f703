#pragma once

// Data-parallel inner loops with a scalar reference and an AVX2 variant,
// selected once at runtime.
//
// Both variants evaluate in the same order: reductions use four interleaved
// partial sums combined as (s0 + s1) + (s2 + s3) followed by a sequential
// tail, and no fused multiply-add is used anywhere. Results are therefore
// bit-identical across variants, which keeps simulation histories
// independent of the host ISA.

#include <cstddef>
#include <span>
#include <string_view>

namespace cbsim::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
    Isa isa;
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// One Welford step over n independent accumulators with sample count
    /// `count` (already including x): delta = x - mean; mean += delta / count;
    /// m2 += delta * (x - mean).
    void (*welford)(const double* x, double* mean, double* m2, double count, std::size_t n);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void welford(const double* x, double* mean, double* m2, double count, std::size_t n);
}  // namespace scalar

#if defined(CBSIM_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void welford(const double* x, double* mean, double* m2, double count, std::size_t n);
}  // namespace avx2
#endif

/// True when the AVX2 variant is compiled in and the CPU supports it.
bool avx2_available() noexcept;

/// The active table. First use honours CBSIM_SIMD=scalar|avx2, otherwise picks
/// the best supported variant.
const KernelTable& active() noexcept;

/// Switches the active table; returns false if `isa` is unavailable.
bool select(Isa isa) noexcept;

std::string_view isa_name(Isa isa) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

/// A += alpha * x x^T for a column-major n x n matrix stored in `a`.
inline void syr(double alpha, std::span<const double> x, std::span<double> a) noexcept {
    const std::size_t n = x.size();
    const auto& k = active();
    for (std::size_t j = 0; j < n; ++j) k.axpy(alpha * x[j], x.data(), a.data() + j * n, n);
}

inline void welford(std::span<const double> x, std::span<double> mean, std::span<double> m2, double count) noexcept {
    active().welford(x.data(), mean.data(), m2.data(), count, x.size());
}

}  // namespace cbsim::kernels
