#include "cbsim/policy.hpp"

#include <cmath>

#include "cbsim/policies.hpp"

namespace cbsim {

namespace {

void check_finite(double v) {
    if (!std::isfinite(v)) throw ContractError("which_max_tied: non-finite value");
}

}  // namespace

ArmIndex which_max_tied(std::span<const double> values, Rng& rng) {
    if (values.empty()) throw ContractError("which_max_tied: empty input");
    double best = values[0];
    check_finite(best);
    std::size_t ties = 1;
    for (std::size_t i = 1; i < values.size(); ++i) {
        check_finite(values[i]);
        if (values[i] > best) {
            best = values[i];
            ties = 1;
        } else if (values[i] == best) {
            ++ties;
        }
    }
    std::size_t pick = ties > 1 ? rng.uniform_index(ties) : 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == best && pick-- == 0) return i;
    }
    return 0;  // unreachable
}

std::vector<ArmIndex> max_tie_set(std::span<const double> values, const ContextSnapshot& context) {
    std::vector<ArmIndex> set;
    double best = 0.0;
    for (std::size_t i = 0; i < context.active_count(); ++i) {
        const ArmIndex a = context.active_arm(i);
        if (a >= values.size()) throw ContractError("which_max_tied: arm outside value vector");
        const double v = values[a];
        check_finite(v);
        if (set.empty() || v > best) {
            best = v;
            set.assign(1, a);
        } else if (v == best) {
            set.push_back(a);
        }
    }
    if (set.empty()) throw ContractError("which_max_tied: empty input");
    return set;
}

ArmIndex which_max_tied(std::span<const double> values, const ContextSnapshot& context, Rng& rng) {
    if (!context.arms) {
        if (values.size() != context.k) throw ContractError("which_max_tied: value vector length differs from k");
        return which_max_tied(values, rng);
    }
    const auto set = max_tie_set(values, context);
    return set.size() > 1 ? set[rng.uniform_index(set.size())] : set.front();
}

// ---------------------------------------------------------------- Random

ActionChoice RandomPolicy::get_action(std::size_t, const ContextSnapshot& context, Rng& rng) {
    const std::size_t m = context.active_count();
    return {context.active_arm(rng.uniform_index(m)), 1.0 / static_cast<double>(m)};
}

std::optional<double> RandomPolicy::selection_probability(std::size_t, const ContextSnapshot& context,
                                                          ArmIndex arm) const {
    return context.is_active(arm) ? 1.0 / static_cast<double>(context.active_count()) : 0.0;
}

// ---------------------------------------------------------------- Oracle

ActionChoice OraclePolicy::get_action(std::size_t, const ContextSnapshot& context, Rng& rng) {
    if (!context.expected_rewards) throw ContractError("bandit does not support oracle");
    return {which_max_tied(*context.expected_rewards, context, rng), 1.0};
}

std::optional<double> OraclePolicy::selection_probability(std::size_t, const ContextSnapshot& context,
                                                          ArmIndex arm) const {
    if (!context.expected_rewards) return std::nullopt;
    const auto set = max_tie_set(*context.expected_rewards, context);
    for (ArmIndex a : set)
        if (a == arm) return 1.0 / static_cast<double>(set.size());
    return 0.0;
}

}  // namespace cbsim
