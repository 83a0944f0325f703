#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace cbsim {

enum class Stream : std::uint64_t { bandit = 0, policy = 1 };

/// splitmix64 output finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for simulation `sim_index` (1-based) and the given stream.
///
///   seed = mix64(mix64(global_seed ^ 0x9e3779b97f4a7c15) + 2*sim_index + stream)
///
/// The agent never enters the derivation: every agent in simulation s sees the
/// same bandit stream and the same policy stream. For a fixed global seed the
/// map is injective in (sim_index, stream).
constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t sim_index, Stream stream) noexcept {
    const std::uint64_t base = mix64(global_seed ^ 0x9e3779b97f4a7c15ULL);
    return mix64(base + 2 * sim_index + static_cast<std::uint64_t>(stream));
}

/// The single random source handed to bandits and policies.
///
/// Engine: std::mt19937_64 seeded with one 64-bit word. Its output sequence is
/// fixed by the C++ standard, and every transform below is implemented in
/// library code (never std:: distributions), so a seed yields the same stream
/// on every platform.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const result_type x = engine_();
        if (tape_ != nullptr) tape_->push_back(x);
        return x;
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
    /// Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n);
    double normal(double mean, double sd);
    double beta(double alpha, double beta);
    int poisson(double mean);

    /// Appends every raw engine output to `tape` until detached with nullptr.
    void record_to(std::vector<result_type>* tape) noexcept { tape_ = tape; }

private:
    std::mt19937_64 engine_;
    std::vector<result_type>* tape_ = nullptr;
};

}  // namespace cbsim
