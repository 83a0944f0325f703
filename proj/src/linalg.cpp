#include "cbsim/linalg.hpp"

#include <cmath>
#include <string>

#include "cbsim/kernels.hpp"
#include "cbsim/types.hpp"

namespace cbsim::linalg {

Cholesky::Cholesky(std::span<const double> a, std::size_t n) : n_(n), rows_(n * n, 0.0), cols_(n * n, 0.0) {
    for (std::size_t j = 0; j < n; ++j) {
        const double* lj = rows_.data() + j * n;
        const double diag = a[j * n + j] - kernels::dot({lj, j}, {lj, j});
        if (!(diag > 0.0) || !std::isfinite(diag)) {
            throw ContractError("matrix is not positive definite (pivot " + std::to_string(j + 1) + ")");
        }
        const double ljj = std::sqrt(diag);
        rows_[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            const double* li = rows_.data() + i * n;
            rows_[i * n + j] = (a[j * n + i] - kernels::dot({li, j}, {lj, j})) / ljj;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) cols_[j * n + i] = rows_[i * n + j];
}

void Cholesky::forward(std::span<const double> b, std::span<double> z) const {
    for (std::size_t i = 0; i < n_; ++i) {
        const double* li = rows_.data() + i * n_;
        z[i] = (b[i] - kernels::dot({li, i}, {z.data(), i})) / li[i];
    }
}

void Cholesky::backward(std::span<const double> z, std::span<double> x) const {
    for (std::size_t ii = n_; ii-- > 0;) {
        const double* ci = cols_.data() + ii * n_;
        const std::size_t tail = n_ - ii - 1;
        x[ii] = (z[ii] - kernels::dot({ci + ii + 1, tail}, {x.data() + ii + 1, tail})) / ci[ii];
    }
}

void Cholesky::solve(std::span<const double> b, std::span<double> x) const {
    std::vector<double> z(n_);
    forward(b, z);
    backward(z, x);
}

void symv(std::span<const double> a, std::span<const double> x, std::span<double> y) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) y[i] = kernels::dot(a.subspan(i * n, n), x);
}

}  // namespace cbsim::linalg
