#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "cbsim/linalg.hpp"
#include "cbsim/policy.hpp"

namespace cbsim {

/// Per-arm pull counts and running mean rewards.
struct CountMeanState {
    std::vector<std::uint64_t> n;
    std::vector<double> mean;
    int exploit = 0;

    void reset(std::size_t k);
    std::uint64_t total() const noexcept;
    /// n += 1, then mean += (r - mean) / n.
    void credit(ArmIndex arm, double reward);
    nlohmann::json to_json() const;
};

class RandomPolicy final : public Policy {
public:
    std::unique_ptr<Policy> clone() const override { return std::make_unique<RandomPolicy>(*this); }
    std::string_view class_name() const override { return "RandomPolicy"; }
    void set_parameters(std::size_t, std::optional<std::size_t>) override {}
    ActionChoice get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) override;
    void set_reward(std::size_t, const ContextSnapshot&, const ActionChoice&, const RewardOutcome&) override {}
    nlohmann::json theta() const override { return nlohmann::json::object(); }
    std::optional<double> selection_probability(std::size_t t, const ContextSnapshot& context,
                                                ArmIndex arm) const override;
};

/// Plays the arm with the highest expected reward, read from the bandit's
/// expected_rewards side channel.
class OraclePolicy final : public Policy {
public:
    std::unique_ptr<Policy> clone() const override { return std::make_unique<OraclePolicy>(*this); }
    std::string_view class_name() const override { return "OraclePolicy"; }
    void set_parameters(std::size_t, std::optional<std::size_t>) override {}
    ActionChoice get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) override;
    void set_reward(std::size_t, const ContextSnapshot&, const ActionChoice&, const RewardOutcome&) override {}
    nlohmann::json theta() const override { return nlohmann::json::object(); }
    std::optional<double> selection_probability(std::size_t t, const ContextSnapshot& context,
                                                ArmIndex arm) const override;
};

/// Explores uniformly with probability epsilon, otherwise plays the best
/// running mean. Reported propensities are the branch propensities
/// (1 - epsilon when exploiting, epsilon / k when exploring);
/// selection_probability() gives the total probability instead.
class EpsilonGreedyPolicy : public Policy {
public:
    explicit EpsilonGreedyPolicy(double epsilon = 0.1);

    std::unique_ptr<Policy> clone() const override { return std::make_unique<EpsilonGreedyPolicy>(*this); }
    std::string_view class_name() const override { return "EpsilonGreedyPolicy"; }
    void set_parameters(std::size_t k, std::optional<std::size_t> d) override;
    ActionChoice get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) override;
    void set_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                    const RewardOutcome& reward) override;
    nlohmann::json theta() const override;
    std::optional<double> selection_probability(std::size_t t, const ContextSnapshot& context,
                                                ArmIndex arm) const override;

    double epsilon() const noexcept { return epsilon_; }
    const CountMeanState& state() const noexcept { return state_; }
    CountMeanState& state() noexcept { return state_; }

protected:
    double epsilon_;
    CountMeanState state_;
};

/// Epsilon-greedy with epsilon_t = 1 / ln(100 t + 0.001), clamped to [0, 1].
class EpsilonGreedyAnnealingPolicy final : public EpsilonGreedyPolicy {
public:
    EpsilonGreedyAnnealingPolicy() : EpsilonGreedyPolicy(1.0) {}

    static double epsilon_at(std::size_t t);

    std::unique_ptr<Policy> clone() const override { return std::make_unique<EpsilonGreedyAnnealingPolicy>(*this); }
    std::string_view class_name() const override { return "EpsilonGreedyAnnealingPolicy"; }
    ActionChoice get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) override;
    std::optional<double> selection_probability(std::size_t t, const ContextSnapshot& context,
                                                ArmIndex arm) const override;
};

/// Uniform exploration while fewer than `budget` rewards have been counted,
/// then greedy on the means frozen at the end of exploration.
///
/// The mean update is guarded by `sum(n) < budget - 1`, evaluated after the
/// count increment, so the last two exploration rewards are counted but
/// not averaged in.
class EpsilonFirstPolicy final : public Policy {
public:
    explicit EpsilonFirstPolicy(std::uint64_t budget);
    /// budget = ceil(epsilon * horizon)
    static EpsilonFirstPolicy from_epsilon(double epsilon, std::uint64_t horizon);

    std::unique_ptr<Policy> clone() const override { return std::make_unique<EpsilonFirstPolicy>(*this); }
    std::string_view class_name() const override { return "EpsilonFirstPolicy"; }
    void set_parameters(std::size_t k, std::optional<std::size_t> d) override;
    ActionChoice get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) override;
    void set_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                    const RewardOutcome& reward) override;
    nlohmann::json theta() const override;
    std::optional<double> selection_probability(std::size_t t, const ContextSnapshot& context,
                                                ArmIndex arm) const override;

    std::uint64_t budget() const noexcept { return budget_; }
    const CountMeanState& state() const noexcept { return state_; }
    CountMeanState& state() noexcept { return state_; }

private:
    std::uint64_t budget_;
    CountMeanState state_;
};

/// UCB1: play each unplayed arm once (lowest index first), then maximise
/// mean + sqrt(2 ln t / n).
class Ucb1Policy final : public Policy {
public:
    std::unique_ptr<Policy> clone() const override { return std::make_unique<Ucb1Policy>(*this); }
    std::string_view class_name() const override { return "UCB1Policy"; }
    void set_parameters(std::size_t k, std::optional<std::size_t> d) override;
    ActionChoice get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) override;
    void set_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                    const RewardOutcome& reward) override;
    nlohmann::json theta() const override { return state_.to_json(); }
    std::optional<double> selection_probability(std::size_t t, const ContextSnapshot& context,
                                                ArmIndex arm) const override;

    /// Upper confidence indices of the active arms; unplayed arms yield +inf.
    std::vector<double> indices(std::size_t t, const ContextSnapshot& context) const;
    const CountMeanState& state() const noexcept { return state_; }
    CountMeanState& state() noexcept { return state_; }

private:
    std::optional<ArmIndex> first_unplayed(const ContextSnapshot& context) const;
    CountMeanState state_;
};

struct BetaArmState {
    double alpha = 1.0;
    double beta = 1.0;
};

/// Beta-Bernoulli Thompson sampling. Rewards must be exactly 0 or 1.
class ThompsonSamplingPolicy final : public Policy {
public:
    ThompsonSamplingPolicy(double alpha0 = 1.0, double beta0 = 1.0);

    std::unique_ptr<Policy> clone() const override { return std::make_unique<ThompsonSamplingPolicy>(*this); }
    std::string_view class_name() const override { return "ThompsonSamplingPolicy"; }
    void set_parameters(std::size_t k, std::optional<std::size_t> d) override;
    ActionChoice get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) override;
    void set_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                    const RewardOutcome& reward) override;
    nlohmann::json theta() const override;

    const std::vector<BetaArmState>& arms() const noexcept { return arms_; }
    std::vector<BetaArmState>& arms() noexcept { return arms_; }

private:
    double alpha0_;
    double beta0_;
    std::vector<BetaArmState> arms_;
};

/// LinUCB with disjoint linear models: one ridge regression per arm,
///   theta_a = A_a^-1 b_a,   p_a = theta_a^T x + alpha * sqrt(x^T A_a^-1 x).
class LinUcbDisjointPolicy final : public Policy {
public:
    enum class Solver {
        direct,           ///< cached Cholesky factor of A, refactored after each update
        sherman_morrison  ///< incrementally maintained A^-1
    };

    struct ArmState {
        Matrix A;               ///< d x d, I + sum x x^T
        std::vector<double> b;  ///< sum r x
    };

    explicit LinUcbDisjointPolicy(double alpha = 1.0, Solver solver = Solver::direct);

    std::unique_ptr<Policy> clone() const override { return std::make_unique<LinUcbDisjointPolicy>(*this); }
    std::string_view class_name() const override { return "LinUCBDisjointPolicy"; }
    void set_parameters(std::size_t k, std::optional<std::size_t> d) override;
    ActionChoice get_action(std::size_t t, const ContextSnapshot& context, Rng& rng) override;
    void set_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                    const RewardOutcome& reward) override;
    nlohmann::json theta() const override;
    std::optional<double> selection_probability(std::size_t t, const ContextSnapshot& context,
                                                ArmIndex arm) const override;

    double alpha() const noexcept { return alpha_; }
    Solver solver() const noexcept { return solver_; }
    const std::vector<ArmState>& arms() const noexcept { return arms_; }
    /// Current ridge estimate A_a^-1 b_a.
    std::vector<double> theta_hat(ArmIndex arm) const;
    /// Upper confidence score p_a for feature vector x.
    double score(ArmIndex arm, std::span<const double> x) const;
    /// Rank-one update of arm `arm` with (x, r); what set_reward applies.
    void update(ArmIndex arm, std::span<const double> x, double reward);

private:
    struct Cache {
        bool fresh = false;
        linalg::Cholesky factor;        // direct
        std::vector<double> a_inv;      // sherman_morrison, column-major
        std::vector<double> theta_hat;
    };

    const Cache& cache(ArmIndex arm) const;
    std::vector<double> scores(const ContextSnapshot& context) const;

    double alpha_;
    Solver solver_;
    std::size_t d_ = 0;
    std::vector<ArmState> arms_;
    mutable std::vector<Cache> caches_;
};

}  // namespace cbsim
