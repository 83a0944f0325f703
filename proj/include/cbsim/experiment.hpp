#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbsim/analytics.hpp"
#include "cbsim/engine.hpp"

namespace cbsim {

/// All problems found in a configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    std::vector<std::string> errors_;
};

struct BanditSpec {
    std::string type;
    nlohmann::json params;
};

struct AgentSpec {
    std::string policy;
    nlohmann::json params;
    std::string name;
};

struct PlotSpec {
    PlotOptions options;
    std::filesystem::path table;           ///< tidy CSV
    std::optional<std::filesystem::path> svg;
};

struct ExperimentConfig {
    SimConfig sim;
    BanditSpec bandit;
    std::vector<AgentSpec> agents;
    std::filesystem::path base_dir;  ///< relative paths resolve against this
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> history;
    std::optional<std::filesystem::path> summary;
    std::vector<PlotSpec> plots;
};

/// Parses and validates a JSON experiment. Every problem is collected before
/// a ConfigError is thrown. `default_workers` is used when the document sets
/// no worker count.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                              std::optional<std::size_t> default_workers = std::nullopt);
ExperimentConfig parse_config(const std::filesystem::path& path,
                              std::optional<std::size_t> default_workers = std::nullopt);

std::unique_ptr<Bandit> make_bandit(const BanditSpec& spec, const std::filesystem::path& base_dir);
std::unique_ptr<Policy> make_policy(const AgentSpec& spec, std::size_t horizon);
std::vector<Agent> build_agents(const ExperimentConfig& config);

/// Bandit and policy identifiers with their parameters, in a fixed order.
std::string list_registry();

/// Runs the experiment, writes the requested outputs, prints the summary to
/// `out` and line-delimited JSON events to `log`. Returns 0 on success and 1
/// when any simulation task or output failed.
int run_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& log);

}  // namespace cbsim
