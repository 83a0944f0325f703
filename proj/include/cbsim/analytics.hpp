#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cbsim/history.hpp"

namespace cbsim {

/// optimal_reward - reward, or nothing when the optimum is unknown.
std::optional<double> per_step_regret(const StepRecord& record);

/// Across-simulation statistics of one quantity, indexed by t - 1.
struct Moments {
    std::vector<double> mean;
    std::vector<double> var;  ///< sample variance (n - 1 denominator); 0 for one sample
    std::vector<double> sd;
    std::vector<double> se;   ///< sd / sqrt(n)
    std::vector<double> ci;   ///< 95% half-width, 1.96 * se

    std::size_t size() const noexcept { return mean.size(); }
};

struct AggregateSeries {
    std::string agent;
    std::size_t sims = 0;
    std::size_t horizon = 0;
    std::size_t arms = 0;

    Moments reward;
    Moments cum_reward;
    Moments cum_reward_rate;  ///< cumulative reward / t
    std::optional<Moments> regret;
    std::optional<Moments> cum_regret;
    std::optional<Moments> cum_regret_rate;
    /// Mean optimal reward per t, when every step recorded one.
    std::optional<std::vector<double>> optimal_mean;
    /// Fraction of simulations choosing each arm, row-major horizon x arms.
    std::vector<double> arm_share;

    double share(std::size_t t, ArmIndex arm) const { return arm_share[(t - 1) * arms + arm]; }
};

/// Per-agent statistics, in the history's agent order. Every run of an agent
/// must have the same length; otherwise a ContractError suggests reindexing.
std::vector<AggregateSeries> aggregate(const HistoryLog& history);

/// Final-t blocks for cumulative regret, reward and reward rate, one row per
/// agent sorted by name. Regret reads "n/a" when no agent has it.
std::string summarize(const HistoryLog& history);
std::string summarize(const std::vector<AggregateSeries>& series);

enum class PlotKind { average, cumulative, arms };
enum class Dispersion { none, sd, var, ci };

struct PlotOptions {
    PlotKind kind = PlotKind::cumulative;
    bool regret = true;
    bool rate = false;
    Dispersion dispersion = Dispersion::none;
    std::size_t interval = 1;  ///< keep every interval-th t (and the last one)
    bool smooth = false;       ///< centred moving average of width `interval` before thinning
    std::vector<std::string> limit_agents;
    std::optional<std::size_t> limit_context;  ///< 1-based feature; arms plots only
};

struct PlotRow {
    std::string agent;
    std::size_t t;
    std::string series;
    double value;
    std::optional<double> lower;
    std::optional<double> upper;
};

/// Tidy plot table. Arm shares are percentages. Throws ContractError on an
/// option the history cannot satisfy (regret without optimal rewards,
/// limit_context without saved contexts).
std::vector<PlotRow> emit_plot_series(const HistoryLog& history, const PlotOptions& options);

PlotKind parse_plot_kind(std::string_view s);
Dispersion parse_dispersion(std::string_view s);
std::string_view plot_kind_name(PlotKind kind) noexcept;

/// CSV with header agent,t,series,value,lower,upper.
void write_plot_csv(std::ostream& out, const std::vector<PlotRow>& rows);
/// Standalone SVG line chart of the table, one line per (agent, series).
void write_plot_svg(std::ostream& out, const std::vector<PlotRow>& rows, const std::string& title);

}  // namespace cbsim
