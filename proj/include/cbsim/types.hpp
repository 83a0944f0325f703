#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbsim {

/// Arm index. Zero-based inside the library, one-based in every file format.
using ArmIndex = std::size_t;

/// Raised when a bandit, policy or engine contract is violated.
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense column-major matrix. A context X is stored d x k so that each arm's
/// feature vector is one contiguous column.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    /// Builds from row-major values, the order used in config files.
    static Matrix from_row_major(std::size_t rows, std::size_t cols, std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[c * rows_ + r]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[c * rows_ + r]; }

    std::span<double> col(std::size_t c) noexcept { return {data_.data() + c * rows_, rows_}; }
    std::span<const double> col(std::size_t c) const noexcept { return {data_.data() + c * rows_, rows_}; }
    std::vector<double> row(std::size_t r) const;

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// What a bandit reveals at one step.
struct ContextSnapshot {
    std::size_t k = 0;
    std::size_t d = 0;                                ///< 0 when the bandit is context-free
    std::optional<Matrix> X;                          ///< d x k
    std::optional<std::vector<ArmIndex>> arms;        ///< active subset; all arms when absent
    std::optional<std::vector<double>> expected_rewards;  ///< oracle side channel, length k

    std::size_t active_count() const noexcept { return arms ? arms->size() : k; }
    ArmIndex active_arm(std::size_t i) const noexcept { return arms ? (*arms)[i] : i; }
    bool is_active(ArmIndex a) const;

    /// Throws ContractError when shape or subset invariants fail.
    void validate() const;
};

struct ActionChoice {
    ArmIndex choice = 0;
    std::optional<double> propensity;
};

struct RewardOutcome {
    double reward = 0.0;
    std::optional<double> optimal_reward;
    std::optional<ArmIndex> optimal_arm;
};

/// Column `arm` of context.X.
std::span<const double> get_arm_context(const ContextSnapshot& context, ArmIndex arm);

/// The full d x k matrix. A context-free snapshot yields an empty matrix.
const Matrix& get_full_context(const ContextSnapshot& context);

}  // namespace cbsim
