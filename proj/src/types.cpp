#include "cbsim/types.hpp"

#include <algorithm>
#include <cmath>

namespace cbsim {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_row_major(std::size_t rows, std::size_t cols, std::span<const double> values) {
    if (values.size() != rows * cols) {
        throw ContractError("matrix expects " + std::to_string(rows * cols) + " values, got " +
                            std::to_string(values.size()));
    }
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = values[r * cols + c];
    return m;
}

std::vector<double> Matrix::row(std::size_t r) const {
    std::vector<double> out(cols_);
    for (std::size_t c = 0; c < cols_; ++c) out[c] = (*this)(r, c);
    return out;
}

bool ContextSnapshot::is_active(ArmIndex a) const {
    if (a >= k) return false;
    if (!arms) return true;
    return std::find(arms->begin(), arms->end(), a) != arms->end();
}

void ContextSnapshot::validate() const {
    if (k < 1) throw ContractError("context has no arms");
    if (X && (X->rows() != d || X->cols() != k)) {
        throw ContractError("context X is " + std::to_string(X->rows()) + "x" + std::to_string(X->cols()) +
                            ", expected " + std::to_string(d) + "x" + std::to_string(k));
    }
    if (arms) {
        if (arms->empty()) throw ContractError("active arm subset is empty");
        std::vector<ArmIndex> sorted = *arms;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.back() >= k) throw ContractError("active arm out of range");
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ContractError("active arm subset has duplicates");
    }
    if (expected_rewards && expected_rewards->size() != k)
        throw ContractError("expected_rewards length differs from k");
}

std::span<const double> get_arm_context(const ContextSnapshot& context, ArmIndex arm) {
    if (!context.X) throw ContractError("context carries no feature matrix");
    if (arm >= context.X->cols()) {
        throw ContractError("arm " + std::to_string(arm + 1) + " out of range 1.." +
                            std::to_string(context.X->cols()));
    }
    return context.X->col(arm);
}

const Matrix& get_full_context(const ContextSnapshot& context) {
    static const Matrix empty;
    return context.X ? *context.X : empty;
}

}  // namespace cbsim
