#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "cbsim/rng.hpp"
#include "cbsim/types.hpp"

namespace cbsim {

/// What a Bernoulli-family bandit reports as optimal_reward: the success
/// probability of the optimal arm, or that arm's realised 0/1 draw for the step.
enum class OptimalReward { expected, realized };

/// Environment producing contexts and rewards.
///
/// get_context() returns a reference into the bandit that stays valid until
/// the next get_context() call. Synthetic bandits draw the rewards of every
/// arm (arm 1..k, in order) on each step, so their random stream does not
/// depend on the arms a policy picks.
class Bandit {
public:
    virtual ~Bandit() = default;

    virtual std::unique_ptr<Bandit> clone() const = 0;
    virtual std::string_view class_name() const = 0;
    virtual std::size_t k() const = 0;
    /// Feature count; empty for context-free bandits.
    virtual std::optional<std::size_t> d() const = 0;

    /// Runs once after seeding, before the first step.
    virtual void post_initialization(Rng& /*rng*/) {}
    /// Pre-draws n steps. Only called when precaching() is set; must not change
    /// observable behaviour.
    virtual void generate_bandit_data(std::size_t /*n*/, Rng& /*rng*/) {}

    virtual const ContextSnapshot& get_context(std::size_t t, Rng& rng) = 0;
    /// An empty result means "no feedback for this step" (offline bandits on
    /// rows the policy does not match).
    virtual std::optional<RewardOutcome> get_reward(std::size_t t, const ContextSnapshot& context,
                                                    const ActionChoice& action, Rng& rng) = 0;

    /// Number of steps available for data-backed bandits.
    virtual std::optional<std::size_t> data_length() const { return std::nullopt; }

    bool precaching() const noexcept { return precaching_; }
    void set_precaching(bool on) noexcept { precaching_ = on; }

protected:
    void check_choice(const ActionChoice& action) const;

private:
    bool precaching_ = false;
};

/// Context-free Bernoulli arms: reward_a = 1{w_a > u_a}, u_a ~ U(0,1).
/// optimal_reward is w[optimal_arm] unless the realised convention is chosen.
class BasicBernoulliBandit final : public Bandit {
public:
    explicit BasicBernoulliBandit(std::vector<double> weights, OptimalReward optimal = OptimalReward::expected);

    std::unique_ptr<Bandit> clone() const override { return std::make_unique<BasicBernoulliBandit>(*this); }
    std::string_view class_name() const override { return "BasicBernoulliBandit"; }
    std::size_t k() const override { return weights_.size(); }
    std::optional<std::size_t> d() const override { return std::nullopt; }
    const ContextSnapshot& get_context(std::size_t t, Rng& rng) override;
    std::optional<RewardOutcome> get_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                                            Rng& rng) override;

private:
    std::vector<double> weights_;
    OptimalReward optimal_;
    std::vector<double> rewards_;
    ContextSnapshot context_;
};

/// Context-free Gaussian arms: reward_a ~ N(mu_a, sigma_a).
/// optimal_reward is mu[optimal_arm].
class BasicGaussianBandit final : public Bandit {
public:
    BasicGaussianBandit(std::vector<double> mu, std::vector<double> sigma);

    std::unique_ptr<Bandit> clone() const override { return std::make_unique<BasicGaussianBandit>(*this); }
    std::string_view class_name() const override { return "BasicGaussianBandit"; }
    std::size_t k() const override { return mu_.size(); }
    std::optional<std::size_t> d() const override { return std::nullopt; }
    const ContextSnapshot& get_context(std::size_t t, Rng& rng) override;
    std::optional<RewardOutcome> get_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                                            Rng& rng) override;

private:
    std::vector<double> mu_;
    std::vector<double> sigma_;
    std::vector<double> rewards_;
    ContextSnapshot context_;
};

/// d x k weight matrix; each step one feature, drawn uniformly, is active.
/// X is that one-hot d-vector recycled to all k columns, and arm a pays 1
/// with probability W[active, a]. optimal_reward is W[active, optimal_arm]
/// unless the realised convention is chosen.
class ContextualBernoulliBandit final : public Bandit {
public:
    explicit ContextualBernoulliBandit(Matrix weights, OptimalReward optimal = OptimalReward::expected);

    std::unique_ptr<Bandit> clone() const override { return std::make_unique<ContextualBernoulliBandit>(*this); }
    std::string_view class_name() const override { return "ContextualBernoulliBandit"; }
    std::size_t k() const override { return weights_.cols(); }
    std::optional<std::size_t> d() const override { return weights_.rows(); }
    void generate_bandit_data(std::size_t n, Rng& rng) override;
    const ContextSnapshot& get_context(std::size_t t, Rng& rng) override;
    std::optional<RewardOutcome> get_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                                            Rng& rng) override;

    const Matrix& weights() const noexcept { return weights_; }
    std::size_t active_feature() const noexcept { return active_; }

private:
    struct CachedStep {
        std::size_t feature;
        std::vector<double> rewards;
        ArmIndex optimal_arm;
    };
    void draw_rewards(Rng& rng);

    Matrix weights_;
    OptimalReward optimal_;
    std::size_t active_ = 0;
    std::vector<double> rewards_;
    ArmIndex optimal_arm_ = 0;
    ContextSnapshot context_;
    std::vector<CachedStep> cache_;
    std::size_t cursor_ = 0;
};

/// Context-free Poisson-threshold arms: p_a ~ Poisson(2), reward_a = 1{p_a < w_a}.
/// optimal_arm = argmax w; optimal_reward is the realised reward of that arm.
class BasicPoissonBandit final : public Bandit {
public:
    explicit BasicPoissonBandit(std::vector<double> weights);

    static constexpr double kPoissonMean = 2.0;

    std::unique_ptr<Bandit> clone() const override { return std::make_unique<BasicPoissonBandit>(*this); }
    std::string_view class_name() const override { return "BasicPoissonBandit"; }
    std::size_t k() const override { return weights_.size(); }
    std::optional<std::size_t> d() const override { return std::nullopt; }
    const ContextSnapshot& get_context(std::size_t t, Rng& rng) override;
    std::optional<RewardOutcome> get_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                                            Rng& rng) override;

    /// P(Poisson(2) < w).
    static double success_probability(double w);

private:
    std::vector<double> weights_;
    std::vector<double> rewards_;
    ContextSnapshot context_;
};

}  // namespace cbsim
