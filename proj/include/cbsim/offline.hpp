#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbsim/bandit.hpp"
#include "cbsim/history.hpp"
#include "cbsim/policy.hpp"

namespace cbsim {

struct LoggedEvent {
    ArmIndex choice;
    double reward;
    std::optional<double> propensity;
    std::span<const double> context;
};

/// Logged interactions in evaluation order. Contexts are stored row by row.
class LoggedDataset {
public:
    LoggedDataset(std::size_t k, std::size_t d, bool has_propensity)
        : k_(k), d_(d), has_propensity_(has_propensity) {}

    std::size_t k() const noexcept { return k_; }
    std::size_t d() const noexcept { return d_; }
    std::size_t size() const noexcept { return choices_.size(); }
    bool has_propensity() const noexcept { return has_propensity_; }

    /// Throws ContractError if the event does not fit (k, d), or carries a
    /// propensity exactly when the dataset does not.
    void push_back(ArmIndex choice, double reward, std::optional<double> propensity, std::span<const double> context);

    LoggedEvent operator[](std::size_t i) const;

private:
    std::size_t k_;
    std::size_t d_;
    bool has_propensity_;
    std::vector<ArmIndex> choices_;
    std::vector<double> rewards_;
    std::vector<double> propensities_;
    std::vector<double> contexts_;
};

/// Every malformed row of a log file, one message per row.
class LogFormatError : public std::runtime_error {
public:
    explicit LogFormatError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Whitespace-separated rows: action reward [propensity] x_1 .. x_d.
/// Actions are 1-based unless `one_based` is false.
LoggedDataset read_log(std::istream& in, std::size_t k, std::size_t d, bool has_propensity, bool one_based = true);
LoggedDataset load_log(const std::filesystem::path& path, std::size_t k, std::size_t d, bool has_propensity,
                       bool one_based = true);
void write_log(std::ostream& out, const LoggedDataset& data);
void write_log(const std::filesystem::path& path, const LoggedDataset& data);

/// Replays logged events in order. The logged context is recycled to all k
/// columns of X. A reward is returned only when the policy picks the logged
/// action; other rows are consumed without feedback.
class ReplayBandit final : public Bandit {
public:
    explicit ReplayBandit(std::shared_ptr<const LoggedDataset> data);

    std::unique_ptr<Bandit> clone() const override { return std::make_unique<ReplayBandit>(*this); }
    std::string_view class_name() const override { return "OfflineReplayEvaluatorBandit"; }
    std::size_t k() const override { return data_->k(); }
    std::optional<std::size_t> d() const override { return data_->d(); }
    const ContextSnapshot& get_context(std::size_t t, Rng& rng) override;
    std::optional<RewardOutcome> get_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                                            Rng& rng) override;
    std::optional<std::size_t> data_length() const override { return data_->size(); }

private:
    std::shared_ptr<const LoggedDataset> data_;
    std::size_t row_ = 0;
    ContextSnapshot context_;
};

/// Credits every logged event with 1{choice = logged action} * r / p, so the
/// running mean of credited rewards is the IPS estimate.
class PropensityWeightingBandit final : public Bandit {
public:
    explicit PropensityWeightingBandit(std::shared_ptr<const LoggedDataset> data);

    std::unique_ptr<Bandit> clone() const override { return std::make_unique<PropensityWeightingBandit>(*this); }
    std::string_view class_name() const override { return "OfflinePropensityWeightingBandit"; }
    std::size_t k() const override { return data_->k(); }
    std::optional<std::size_t> d() const override { return data_->d(); }
    const ContextSnapshot& get_context(std::size_t t, Rng& rng) override;
    std::optional<RewardOutcome> get_reward(std::size_t t, const ContextSnapshot& context, const ActionChoice& action,
                                            Rng& rng) override;
    std::optional<std::size_t> data_length() const override { return data_->size(); }

private:
    std::shared_ptr<const LoggedDataset> data_;
    std::size_t row_ = 0;
    ContextSnapshot context_;
};

/// Reward per matched event, R / L. Empty when nothing matched.
std::optional<double> replay_value(const RunLog& run);

using TargetPolicy = std::function<ArmIndex(const LoggedEvent&)>;

/// (1/N) * sum over all N events of 1{target(x) = a} * r / p. Throws
/// ContractError when an event lacks a positive propensity.
double ips_estimate(const LoggedDataset& data, const TargetPolicy& target);

enum class PropensitySource {
    reported,  ///< whatever the policy attaches to its ActionChoice
    exact,     ///< Policy::selection_probability, evaluated before the action is drawn
};

/// Runs `policy` online against `bandit` for n steps and logs each step's
/// chosen arm, reward, propensity and chosen-arm context. The policy learns
/// from every step, as a live logging policy would.
LoggedDataset simulate_log(const Bandit& bandit, const Policy& policy, std::size_t n, std::uint64_t seed,
                           std::optional<PropensitySource> propensity = std::nullopt);

}  // namespace cbsim
