#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cbsim/bandit.hpp"
#include "cbsim/policy.hpp"

namespace cbsim {

namespace {

void require_probabilities(std::span<const double> w) {
    for (double v : w)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("Bernoulli weights must lie in [0,1]");
}

}  // namespace

void Bandit::check_choice(const ActionChoice& action) const {
    if (action.choice >= k()) {
        throw ContractError("choice " + std::to_string(action.choice + 1) + " out of range 1.." + std::to_string(k()));
    }
}

// ---------------------------------------------------------------- Bernoulli

BasicBernoulliBandit::BasicBernoulliBandit(std::vector<double> weights, OptimalReward optimal)
    : weights_(std::move(weights)), optimal_(optimal) {
    if (weights_.empty()) throw std::invalid_argument("bandit needs at least one arm");
    require_probabilities(weights_);
    rewards_.resize(weights_.size());
    context_.k = weights_.size();
    context_.expected_rewards = weights_;
}

const ContextSnapshot& BasicBernoulliBandit::get_context(std::size_t, Rng&) { return context_; }

std::optional<RewardOutcome> BasicBernoulliBandit::get_reward(std::size_t, const ContextSnapshot&,
                                                              const ActionChoice& action, Rng& rng) {
    check_choice(action);
    for (std::size_t a = 0; a < weights_.size(); ++a) rewards_[a] = weights_[a] > rng.uniform() ? 1.0 : 0.0;
    const ArmIndex best = which_max_tied(weights_, rng);
    const double optimal = optimal_ == OptimalReward::expected ? weights_[best] : rewards_[best];
    return RewardOutcome{rewards_[action.choice], optimal, best};
}

// ---------------------------------------------------------------- Gaussian

BasicGaussianBandit::BasicGaussianBandit(std::vector<double> mu, std::vector<double> sigma)
    : mu_(std::move(mu)), sigma_(std::move(sigma)) {
    if (mu_.empty()) throw std::invalid_argument("bandit needs at least one arm");
    if (mu_.size() != sigma_.size()) throw std::invalid_argument("mu and sigma differ in length");
    for (double s : sigma_)
        if (!(s > 0.0)) throw std::invalid_argument("sigma must be positive");
    rewards_.resize(mu_.size());
    context_.k = mu_.size();
    context_.expected_rewards = mu_;
}

const ContextSnapshot& BasicGaussianBandit::get_context(std::size_t, Rng&) { return context_; }

std::optional<RewardOutcome> BasicGaussianBandit::get_reward(std::size_t, const ContextSnapshot&,
                                                             const ActionChoice& action, Rng& rng) {
    check_choice(action);
    for (std::size_t a = 0; a < mu_.size(); ++a) rewards_[a] = rng.normal(mu_[a], sigma_[a]);
    const ArmIndex best = which_max_tied(mu_, rng);
    return RewardOutcome{rewards_[action.choice], mu_[best], best};
}

// ---------------------------------------------------------------- contextual Bernoulli

ContextualBernoulliBandit::ContextualBernoulliBandit(Matrix weights, OptimalReward optimal)
    : weights_(std::move(weights)), optimal_(optimal) {
    if (weights_.rows() == 0 || weights_.cols() == 0) throw std::invalid_argument("weight matrix must be non-empty");
    require_probabilities(weights_.data());
    rewards_.resize(weights_.cols());
    context_.k = weights_.cols();
    context_.d = weights_.rows();
    context_.X = Matrix(weights_.rows(), weights_.cols());
    context_.expected_rewards = std::vector<double>(weights_.cols());
}

void ContextualBernoulliBandit::draw_rewards(Rng& rng) {
    const std::size_t k = weights_.cols();
    auto& expected = *context_.expected_rewards;
    for (std::size_t a = 0; a < k; ++a) rewards_[a] = weights_(active_, a) > rng.uniform() ? 1.0 : 0.0;
    optimal_arm_ = which_max_tied(expected, rng);
}

void ContextualBernoulliBandit::generate_bandit_data(std::size_t n, Rng& rng) {
    // Same draw order as the live path: feature, k reward uniforms, tie-break.
    cache_.clear();
    cache_.reserve(n);
    cursor_ = 0;
    for (std::size_t i = 0; i < n; ++i) {
        active_ = rng.uniform_index(weights_.rows());
        *context_.expected_rewards = weights_.row(active_);
        draw_rewards(rng);
        cache_.push_back({active_, rewards_, optimal_arm_});
    }
}

const ContextSnapshot& ContextualBernoulliBandit::get_context(std::size_t, Rng& rng) {
    const bool cached = cursor_ < cache_.size();
    const std::size_t feature = cached ? cache_[cursor_].feature : rng.uniform_index(weights_.rows());
    Matrix& X = *context_.X;
    std::fill(X.data().begin(), X.data().end(), 0.0);
    for (std::size_t a = 0; a < weights_.cols(); ++a) X(feature, a) = 1.0;
    active_ = feature;
    auto& expected = *context_.expected_rewards;
    for (std::size_t a = 0; a < weights_.cols(); ++a) expected[a] = weights_(active_, a);
    return context_;
}

std::optional<RewardOutcome> ContextualBernoulliBandit::get_reward(std::size_t, const ContextSnapshot&,
                                                                   const ActionChoice& action, Rng& rng) {
    check_choice(action);
    if (cursor_ < cache_.size()) {
        rewards_ = cache_[cursor_].rewards;
        optimal_arm_ = cache_[cursor_].optimal_arm;
        ++cursor_;
    } else {
        draw_rewards(rng);
    }
    const double optimal =
        optimal_ == OptimalReward::expected ? weights_(active_, optimal_arm_) : rewards_[optimal_arm_];
    return RewardOutcome{rewards_[action.choice], optimal, optimal_arm_};
}

// ---------------------------------------------------------------- Poisson

BasicPoissonBandit::BasicPoissonBandit(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw std::invalid_argument("bandit needs at least one arm");
    for (double w : weights_)
        if (!std::isfinite(w)) throw std::invalid_argument("Poisson thresholds must be finite");
    rewards_.resize(weights_.size());
    context_.k = weights_.size();
    std::vector<double> expected;
    for (double w : weights_) expected.push_back(success_probability(w));
    context_.expected_rewards = std::move(expected);
}

double BasicPoissonBandit::success_probability(double w) {
    // P(p < w) = P(p <= ceil(w) - 1)
    const double top = std::ceil(w) - 1.0;
    if (top < 0.0) return 0.0;
    double term = std::exp(-kPoissonMean), sum = term;
    for (int j = 1; j <= static_cast<int>(top); ++j) {
        term *= kPoissonMean / j;
        sum += term;
    }
    return std::min(sum, 1.0);
}

const ContextSnapshot& BasicPoissonBandit::get_context(std::size_t, Rng&) { return context_; }

std::optional<RewardOutcome> BasicPoissonBandit::get_reward(std::size_t, const ContextSnapshot&,
                                                            const ActionChoice& action, Rng& rng) {
    check_choice(action);
    for (std::size_t a = 0; a < weights_.size(); ++a)
        rewards_[a] = static_cast<double>(rng.poisson(kPoissonMean)) < weights_[a] ? 1.0 : 0.0;
    const ArmIndex best = which_max_tied(weights_, rng);
    return RewardOutcome{rewards_[action.choice], rewards_[best], best};
}

}  // namespace cbsim
