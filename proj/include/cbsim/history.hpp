#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbsim/types.hpp"

namespace cbsim {

/// One interaction, materialised. HistoryLog stores these column-wise.
struct StepRecord {
    std::string agent;
    std::size_t sim = 0;  ///< 1-based
    std::size_t t = 0;    ///< 1-based policy step
    ArmIndex choice = 0;
    double reward = 0.0;
    std::optional<double> optimal_reward;
    std::optional<ArmIndex> optimal_arm;
    std::optional<double> propensity;
    std::vector<double> context;  ///< chosen arm's feature vector, when saved
    std::string theta_json;       ///< when saved

    bool operator==(const StepRecord&) const = default;
};

/// All steps of one (agent, simulation) task, in t order.
class RunLog {
public:
    RunLog() = default;
    explicit RunLog(std::size_t sim) : sim_(sim) {}

    std::size_t sim() const noexcept { return sim_; }
    std::size_t size() const noexcept { return t_.size(); }
    bool empty() const noexcept { return t_.empty(); }

    void reserve(std::size_t n);
    /// Appends one step; t must exceed the previous t.
    void append(std::size_t t, ArmIndex choice, double reward, std::optional<double> optimal_reward,
                std::optional<ArmIndex> optimal_arm, std::optional<double> propensity,
                std::span<const double> context = {}, std::string theta_json = {});
    void truncate(std::size_t n);

    std::size_t t(std::size_t i) const noexcept { return t_[i]; }
    ArmIndex choice(std::size_t i) const noexcept { return choice_[i]; }
    double reward(std::size_t i) const noexcept { return reward_[i]; }
    std::optional<double> optimal_reward(std::size_t i) const;
    std::optional<ArmIndex> optimal_arm(std::size_t i) const;
    std::optional<double> propensity(std::size_t i) const;
    std::size_t context_dim() const noexcept { return context_dim_; }
    std::span<const double> context(std::size_t i) const;
    bool has_theta() const noexcept { return !theta_.empty(); }
    const std::string& theta(std::size_t i) const { return theta_[i]; }

    std::span<const double> rewards() const noexcept { return reward_; }
    /// True when every step carries an optimal reward.
    bool regret_available() const noexcept { return missing_optimal_ == 0; }

private:
    std::size_t sim_ = 0;
    std::vector<std::uint32_t> t_;
    std::vector<std::uint32_t> choice_;
    std::vector<double> reward_;
    std::vector<double> optimal_reward_;     // NaN when absent
    std::vector<std::int32_t> optimal_arm_;  // -1 when absent
    std::vector<double> propensity_;         // NaN when absent
    std::size_t missing_optimal_ = 0;
    std::size_t context_dim_ = 0;
    std::vector<double> context_;
    std::vector<std::string> theta_;
};

/// Log of every step of every agent and simulation.
class HistoryLog {
public:
    struct AgentRuns {
        std::string name;
        std::size_t arms = 0;
        std::vector<RunLog> runs;
    };

    /// Appends a run; creates the agent on first sight. `arms` is the bandit's k.
    void add_run(std::string_view agent, std::size_t arms, RunLog run);

    const std::vector<AgentRuns>& agents() const noexcept { return agents_; }
    const AgentRuns* find(std::string_view agent) const;
    std::size_t record_count() const;
    bool empty() const noexcept { return record_count() == 0; }

    /// Agents by name, runs by simulation index.
    void canonical_sort();
    /// Truncates every run of an agent to that agent's shortest run.
    void reindex();

    std::vector<StepRecord> records() const;

    /// CSV with header agent,sim,t,choice,reward,optimal_reward,optimal_arm,propensity
    /// followed by context_1..context_d and theta_json when present. Arm
    /// indices are written 1-based; absent values are empty; reals use 17
    /// significant digits.
    void write_csv(std::ostream& out) const;
    std::string to_csv() const;
    /// Throws std::runtime_error naming the offending line.
    static HistoryLog read_csv(std::istream& in);

private:
    std::vector<AgentRuns> agents_;
};

}  // namespace cbsim
