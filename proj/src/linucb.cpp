#include <cmath>
#include <stdexcept>

#include "cbsim/kernels.hpp"
#include "cbsim/policies.hpp"

namespace cbsim {

LinUcbDisjointPolicy::LinUcbDisjointPolicy(double alpha, Solver solver) : alpha_(alpha), solver_(solver) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be a finite value >= 0");
}

void LinUcbDisjointPolicy::set_parameters(std::size_t k, std::optional<std::size_t> d) {
    if (!d || *d == 0) throw ContractError("LinUCB requires a feature dimension d");
    d_ = *d;
    arms_.assign(k, ArmState{Matrix::identity(d_), std::vector<double>(d_, 0.0)});
    caches_.assign(k, Cache{});
}

const LinUcbDisjointPolicy::Cache& LinUcbDisjointPolicy::cache(ArmIndex arm) const {
    Cache& c = caches_[arm];
    if (c.fresh) return c;
    const ArmState& s = arms_[arm];
    c.theta_hat.assign(d_, 0.0);
    if (solver_ == Solver::direct) {
        c.factor = linalg::Cholesky(s.A.data(), d_);
        c.factor.solve(s.b, c.theta_hat);
    } else {
        if (c.a_inv.empty()) {
            // First use: A is still the identity or was set externally; invert it once.
            linalg::Cholesky f(s.A.data(), d_);
            c.a_inv.assign(d_ * d_, 0.0);
            std::vector<double> e(d_, 0.0);
            for (std::size_t j = 0; j < d_; ++j) {
                e.assign(d_, 0.0);
                e[j] = 1.0;
                f.solve(e, std::span<double>(c.a_inv.data() + j * d_, d_));
            }
        }
        linalg::symv(c.a_inv, s.b, c.theta_hat);
    }
    c.fresh = true;
    return c;
}

std::vector<double> LinUcbDisjointPolicy::theta_hat(ArmIndex arm) const {
    if (arm >= arms_.size()) throw ContractError("LinUCB: unknown arm");
    return cache(arm).theta_hat;
}

double LinUcbDisjointPolicy::score(ArmIndex arm, std::span<const double> x) const {
    if (arm >= arms_.size()) throw ContractError("LinUCB: unknown arm");
    if (x.size() != d_) {
        throw ContractError("LinUCB: context has " + std::to_string(x.size()) + " features, expected " +
                            std::to_string(d_));
    }
    const Cache& c = cache(arm);
    std::vector<double> w(d_);
    double variance;
    if (solver_ == Solver::direct) {
        c.factor.forward(x, w);
        variance = kernels::dot(w, w);
    } else {
        linalg::symv(c.a_inv, x, w);
        variance = kernels::dot(x, w);
    }
    if (!(variance >= 0.0)) throw ContractError("LinUCB: A is numerically not positive definite");
    return kernels::dot(c.theta_hat, x) + alpha_ * std::sqrt(variance);
}

std::vector<double> LinUcbDisjointPolicy::scores(const ContextSnapshot& context) const {
    std::vector<double> p(arms_.size(), 0.0);
    for (std::size_t i = 0; i < context.active_count(); ++i) {
        const ArmIndex a = context.active_arm(i);
        p[a] = score(a, get_arm_context(context, a));
    }
    return p;
}

ActionChoice LinUcbDisjointPolicy::get_action(std::size_t, const ContextSnapshot& context, Rng& rng) {
    if (context.k != arms_.size()) throw ContractError("LinUCB: arm count changed since set_parameters");
    return {which_max_tied(scores(context), context, rng), 1.0};
}

void LinUcbDisjointPolicy::update(ArmIndex arm, std::span<const double> x, double reward) {
    if (arm >= arms_.size()) throw ContractError("LinUCB: reward credited to unknown arm");
    if (x.size() != d_) throw ContractError("LinUCB: dimension mismatch in update");
    ArmState& s = arms_[arm];
    kernels::syr(1.0, x, s.A.data());
    kernels::axpy(reward, x, s.b);

    Cache& c = caches_[arm];
    if (solver_ == Solver::sherman_morrison && !c.a_inv.empty()) {
        // (A + x x^T)^-1 = A^-1 - (A^-1 x)(A^-1 x)^T / (1 + x^T A^-1 x)
        std::vector<double> w(d_);
        linalg::symv(c.a_inv, x, w);
        const double denom = 1.0 + kernels::dot(x, w);
        kernels::syr(-1.0 / denom, w, c.a_inv);
    }
    c.fresh = false;
}

void LinUcbDisjointPolicy::set_reward(std::size_t, const ContextSnapshot& context, const ActionChoice& action,
                                      const RewardOutcome& reward) {
    update(action.choice, get_arm_context(context, action.choice), reward.reward);
}

nlohmann::json LinUcbDisjointPolicy::theta() const {
    nlohmann::json A = nlohmann::json::array(), b = nlohmann::json::array();
    for (const auto& s : arms_) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < d_; ++r) rows.push_back(s.A.row(r));
        A.push_back(std::move(rows));
        b.push_back(s.b);
    }
    return {{"A", A}, {"b", b}};
}

std::optional<double> LinUcbDisjointPolicy::selection_probability(std::size_t, const ContextSnapshot& context,
                                                                  ArmIndex arm) const {
    if (!context.is_active(arm)) return 0.0;
    const auto set = max_tie_set(scores(context), context);
    for (ArmIndex a : set)
        if (a == arm) return 1.0 / static_cast<double>(set.size());
    return 0.0;
}

}  // namespace cbsim
