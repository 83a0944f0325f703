#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbsim/rng.hpp"
#include "cbsim/types.hpp"

namespace cbsim {

/// Index of a maximal entry. Ties are broken uniformly at random with `rng`;
/// no draw is made when the maximum is unique. Throws ContractError on an
/// empty or non-finite input.
ArmIndex which_max_tied(std::span<const double> values, Rng& rng);

/// Same, restricted to the context's active arms. `values` is indexed by arm.
ArmIndex which_max_tied(std::span<const double> values, const ContextSnapshot& context, Rng& rng);

/// Active arms attaining the maximum of `values`.
std::vector<ArmIndex> max_tie_set(std::span<const double> values, const ContextSnapshot& context);

/// Arm-selection strategy. A policy owns its parameter store ("theta"),
/// sized by set_parameters() before the first step.
///
/// `t` is the policy's own 1-based step counter: the number of rewards it has
/// been credited with, plus one.
class Policy {
public:
    virtual ~Policy() = default;

    virtual std::unique_ptr<Policy> clone() const = 0;
    virtual std::string_view class_name() const = 0;

    /// Resets theta for k arms and (for contextual policies) d features.
    virtual void set_parameters(std::size_t k, std::optional<std::size_t> d) = 0;
    virtual ActionChoice get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) = 0;
    virtual void set_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                            const RewardOutcome& reward) = 0;

    /// JSON snapshot of theta.
    virtual nlohmann::json theta() const = 0;

    /// Exact probability that get_action(t, context) would return `arm` given
    /// the current theta, when it has a closed form.
    virtual std::optional<double> selection_probability(std::size_t /*t*/, const ContextSnapshot& /*context*/,
                                                        ArmIndex /*arm*/) const {
        return std::nullopt;
    }
};

}  // namespace cbsim
