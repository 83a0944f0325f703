#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbsim/bandit.hpp"
#include "cbsim/history.hpp"
#include "cbsim/policy.hpp"

namespace cbsim {

/// Contract violation inside one step, tagged with the agent and its step.
class StepFault : public ContractError {
public:
    StepFault(std::string agent, std::size_t t, const std::string& message);

    const std::string& agent() const noexcept { return agent_; }
    std::size_t t() const noexcept { return t_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string agent_;
    std::size_t t_;
    std::string detail_;
};

/// One policy bound to one bandit. Copies are deep.
class Agent {
public:
    struct Step {
        std::size_t t;  ///< policy_t after the step
        ActionChoice action;
        RewardOutcome outcome;
        const ContextSnapshot* context;  ///< valid until the next do_step()
    };

    Agent(std::string name, std::unique_ptr<Policy> policy, std::unique_ptr<Bandit> bandit);
    Agent(const Agent& other);
    Agent& operator=(const Agent& other);
    Agent(Agent&&) noexcept = default;
    Agent& operator=(Agent&&) noexcept = default;
    ~Agent() = default;

    const std::string& name() const noexcept { return name_; }
    Policy& policy() noexcept { return *policy_; }
    const Policy& policy() const noexcept { return *policy_; }
    Bandit& bandit() noexcept { return *bandit_; }
    const Bandit& bandit() const noexcept { return *bandit_; }
    std::size_t agent_t() const noexcept { return agent_t_; }
    std::size_t policy_t() const noexcept { return policy_t_; }

    /// Sizes theta from the bandit, runs post_initialization and, when the
    /// bandit asks for it, precaches `horizon` steps.
    void initialize(Rng& bandit_rng, std::size_t horizon);

    /// get_context -> get_action -> get_reward -> set_reward. Returns nullopt
    /// when the bandit gives no feedback; theta and policy_t are then left
    /// untouched. Throws StepFault on any contract violation.
    std::optional<Step> do_step(Rng& bandit_rng, Rng& policy_rng);

private:
    std::string name_;
    std::unique_ptr<Policy> policy_;
    std::unique_ptr<Bandit> bandit_;
    std::size_t agent_t_ = 0;
    std::size_t policy_t_ = 0;
};

struct SimConfig {
    std::size_t horizon = 100;
    std::size_t simulations = 100;
    std::uint64_t global_seed = 0;
    bool save_context = false;
    bool save_theta = false;
    bool do_parallel = true;
    std::optional<std::size_t> worker_max;
    bool reindex = false;
    /// Called after each finished (agent, sim) task with (done, total).
    /// Calls are serialised.
    std::function<void(std::size_t, std::size_t)> on_progress;

    /// Throws std::invalid_argument on a zero horizon or simulation count.
    void validate() const;
};

struct SimFault {
    std::string agent;
    std::size_t sim = 0;
    std::size_t t = 0;  ///< agent step at which the fault happened
    std::string message;
};

struct SimResult {
    HistoryLog history;
    std::vector<SimFault> faults;
};

/// Runs one prepared agent copy until `horizon` bandit steps have been
/// consumed or its data runs out, recording every non-skipped step.
RunLog run_agent_simulation(Agent& agent, std::size_t sim, const SimConfig& config, Rng& bandit_rng,
                            Rng& policy_rng);

/// Pool size used for `tasks` tasks.
std::size_t worker_count(const SimConfig& config, std::size_t tasks);

/// Runs every agent for config.simulations seeded replications on fresh
/// copies. Agent names must be unique. The history is in canonical order and
/// does not depend on the worker count.
SimResult simulate(std::span<const Agent> agents, const SimConfig& config);

}  // namespace cbsim
