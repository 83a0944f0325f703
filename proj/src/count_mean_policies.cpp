#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cbsim/policies.hpp"

namespace cbsim {

namespace {

void check_arm(const CountMeanState& s, ArmIndex arm) {
    if (arm >= s.n.size()) throw ContractError("reward credited to unknown arm " + std::to_string(arm + 1));
}

double tie_probability(std::span<const double> values, const ContextSnapshot& context, ArmIndex arm) {
    const auto set = max_tie_set(values, context);
    return std::find(set.begin(), set.end(), arm) != set.end() ? 1.0 / static_cast<double>(set.size()) : 0.0;
}

}  // namespace

void CountMeanState::reset(std::size_t k) {
    n.assign(k, 0);
    mean.assign(k, 0.0);
    exploit = 0;
}

std::uint64_t CountMeanState::total() const noexcept {
    return std::accumulate(n.begin(), n.end(), std::uint64_t{0});
}

void CountMeanState::credit(ArmIndex arm, double reward) {
    check_arm(*this, arm);
    n[arm] += 1;
    mean[arm] += (reward - mean[arm]) / static_cast<double>(n[arm]);
}

nlohmann::json CountMeanState::to_json() const {
    return {{"n", n}, {"mean", mean}, {"exploit", exploit}};
}

// ---------------------------------------------------------------- epsilon-greedy

EpsilonGreedyPolicy::EpsilonGreedyPolicy(double epsilon) : epsilon_(epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon out of [0,1]");
}

void EpsilonGreedyPolicy::set_parameters(std::size_t k, std::optional<std::size_t>) { state_.reset(k); }

ActionChoice EpsilonGreedyPolicy::get_action(std::size_t, const ContextSnapshot& context, Rng& rng) {
    if (rng.uniform() > epsilon_) {
        state_.exploit = 1;
        return {which_max_tied(state_.mean, context, rng), 1.0 - epsilon_};
    }
    state_.exploit = 0;
    const std::size_t m = context.active_count();
    return {context.active_arm(rng.uniform_index(m)), epsilon_ / static_cast<double>(m)};
}

void EpsilonGreedyPolicy::set_reward(std::size_t, const ContextSnapshot&, const ActionChoice& action,
                                     const RewardOutcome& reward) {
    state_.credit(action.choice, reward.reward);
}

nlohmann::json EpsilonGreedyPolicy::theta() const { return state_.to_json(); }

std::optional<double> EpsilonGreedyPolicy::selection_probability(std::size_t, const ContextSnapshot& context,
                                                                 ArmIndex arm) const {
    if (!context.is_active(arm)) return 0.0;
    const double explore = epsilon_ / static_cast<double>(context.active_count());
    return explore + (1.0 - epsilon_) * tie_probability(state_.mean, context, arm);
}

// ---------------------------------------------------------------- annealing

double EpsilonGreedyAnnealingPolicy::epsilon_at(std::size_t t) {
    const double eps = 1.0 / std::log(100.0 * static_cast<double>(t) + 0.001);
    return std::clamp(eps, 0.0, 1.0);
}

ActionChoice EpsilonGreedyAnnealingPolicy::get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) {
    epsilon_ = epsilon_at(t);
    return EpsilonGreedyPolicy::get_action(t, context, rng);
}

std::optional<double> EpsilonGreedyAnnealingPolicy::selection_probability(std::size_t t,
                                                                          const ContextSnapshot& context,
                                                                          ArmIndex arm) const {
    EpsilonGreedyPolicy at_t(epsilon_at(t));
    at_t.state() = state_;
    return at_t.selection_probability(t, context, arm);
}

// ---------------------------------------------------------------- epsilon-first

EpsilonFirstPolicy::EpsilonFirstPolicy(std::uint64_t budget) : budget_(budget) {}

EpsilonFirstPolicy EpsilonFirstPolicy::from_epsilon(double epsilon, std::uint64_t horizon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon out of [0,1]");
    return EpsilonFirstPolicy(static_cast<std::uint64_t>(std::ceil(epsilon * static_cast<double>(horizon))));
}

void EpsilonFirstPolicy::set_parameters(std::size_t k, std::optional<std::size_t>) { state_.reset(k); }

ActionChoice EpsilonFirstPolicy::get_action(std::size_t, const ContextSnapshot& context, Rng& rng) {
    if (state_.total() < budget_) {
        const std::size_t m = context.active_count();
        return {context.active_arm(rng.uniform_index(m)), 1.0 / static_cast<double>(m)};
    }
    return {which_max_tied(state_.mean, context, rng), 1.0};
}

void EpsilonFirstPolicy::set_reward(std::size_t, const ContextSnapshot&, const ActionChoice& action,
                                    const RewardOutcome& reward) {
    const ArmIndex arm = action.choice;
    check_arm(state_, arm);
    state_.n[arm] += 1;
    if (state_.total() + 1 < budget_) {  // sum(n) < budget - 1 without unsigned wrap
        state_.mean[arm] += (reward.reward - state_.mean[arm]) / static_cast<double>(state_.n[arm]);
    }
}

nlohmann::json EpsilonFirstPolicy::theta() const { return state_.to_json(); }

std::optional<double> EpsilonFirstPolicy::selection_probability(std::size_t, const ContextSnapshot& context,
                                                                ArmIndex arm) const {
    if (!context.is_active(arm)) return 0.0;
    if (state_.total() < budget_) return 1.0 / static_cast<double>(context.active_count());
    return tie_probability(state_.mean, context, arm);
}

// ---------------------------------------------------------------- UCB1

void Ucb1Policy::set_parameters(std::size_t k, std::optional<std::size_t>) { state_.reset(k); }

std::optional<ArmIndex> Ucb1Policy::first_unplayed(const ContextSnapshot& context) const {
    std::optional<ArmIndex> best;
    for (std::size_t i = 0; i < context.active_count(); ++i) {
        const ArmIndex a = context.active_arm(i);
        if (a >= state_.n.size()) throw ContractError("UCB1: arm outside parameter store");
        if (state_.n[a] == 0 && (!best || a < *best)) best = a;
    }
    return best;
}

std::vector<double> Ucb1Policy::indices(std::size_t t, const ContextSnapshot& context) const {
    std::vector<double> idx(state_.n.size(), -std::numeric_limits<double>::infinity());
    const double log_t = std::log(static_cast<double>(std::max<std::size_t>(t, 1)));
    for (std::size_t i = 0; i < context.active_count(); ++i) {
        const ArmIndex a = context.active_arm(i);
        idx[a] = state_.n[a] == 0 ? std::numeric_limits<double>::infinity()
                                  : state_.mean[a] + std::sqrt(2.0 * log_t / static_cast<double>(state_.n[a]));
    }
    return idx;
}

ActionChoice Ucb1Policy::get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) {
    if (auto unplayed = first_unplayed(context)) return {*unplayed, 1.0};
    return {which_max_tied(indices(t, context), context, rng), 1.0};
}

void Ucb1Policy::set_reward(std::size_t, const ContextSnapshot&, const ActionChoice& action,
                            const RewardOutcome& reward) {
    state_.credit(action.choice, reward.reward);
}

std::optional<double> Ucb1Policy::selection_probability(std::size_t t, const ContextSnapshot& context,
                                                        ArmIndex arm) const {
    if (!context.is_active(arm)) return 0.0;
    if (auto unplayed = first_unplayed(context)) return *unplayed == arm ? 1.0 : 0.0;
    return tie_probability(indices(t, context), context, arm);
}

// ---------------------------------------------------------------- Thompson

ThompsonSamplingPolicy::ThompsonSamplingPolicy(double alpha0, double beta0) : alpha0_(alpha0), beta0_(beta0) {
    if (!(alpha0 > 0.0) || !(beta0 > 0.0)) throw std::invalid_argument("alpha0 and beta0 must be positive");
}

void ThompsonSamplingPolicy::set_parameters(std::size_t k, std::optional<std::size_t>) {
    arms_.assign(k, BetaArmState{alpha0_, beta0_});
}

ActionChoice ThompsonSamplingPolicy::get_action(std::size_t, const ContextSnapshot& context, Rng& rng) {
    std::vector<double> draws(arms_.size(), -1.0);
    for (std::size_t i = 0; i < context.active_count(); ++i) {
        const ArmIndex a = context.active_arm(i);
        if (a >= arms_.size()) throw ContractError("Thompson: arm outside parameter store");
        draws[a] = rng.beta(arms_[a].alpha, arms_[a].beta);
    }
    return {which_max_tied(draws, context, rng), std::nullopt};
}

void ThompsonSamplingPolicy::set_reward(std::size_t, const ContextSnapshot&, const ActionChoice& action,
                                        const RewardOutcome& reward) {
    if (action.choice >= arms_.size()) throw ContractError("Thompson: reward credited to unknown arm");
    if (reward.reward == 1.0) {
        arms_[action.choice].alpha += 1.0;
    } else if (reward.reward == 0.0) {
        arms_[action.choice].beta += 1.0;
    } else {
        throw ContractError("Thompson sampling requires rewards in {0,1}, got " + std::to_string(reward.reward));
    }
}

nlohmann::json ThompsonSamplingPolicy::theta() const {
    nlohmann::json alpha = nlohmann::json::array(), beta = nlohmann::json::array();
    for (const auto& a : arms_) {
        alpha.push_back(a.alpha);
        beta.push_back(a.beta);
    }
    return {{"alpha", alpha}, {"beta", beta}};
}

}  // namespace cbsim
