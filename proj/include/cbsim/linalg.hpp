#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cbsim::linalg {

/// Cholesky factor A = L L^T of a symmetric positive definite matrix.
/// Only the lower triangle of the column-major input is read.
class Cholesky {
public:
    Cholesky() = default;
    /// Throws ContractError when a pivot is not strictly positive.
    Cholesky(std::span<const double> a, std::size_t n);

    std::size_t size() const noexcept { return n_; }

    /// Solves L z = b.
    void forward(std::span<const double> b, std::span<double> z) const;
    /// Solves L^T x = z.
    void backward(std::span<const double> z, std::span<double> x) const;
    /// Solves A x = b.
    void solve(std::span<const double> b, std::span<double> x) const;

private:
    std::size_t n_ = 0;
    std::vector<double> rows_;  // L, row-major (rows are contiguous)
    std::vector<double> cols_;  // L, column-major (columns are contiguous)
};

/// y = A x for a column-major n x n symmetric A (uses columns as rows).
void symv(std::span<const double> a, std::span<const double> x, std::span<double> y);

}  // namespace cbsim::linalg
