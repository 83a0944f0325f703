#include "cbsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace cbsim {

StepFault::StepFault(std::string agent, std::size_t t, const std::string& message)
    : ContractError("agent '" + agent + "' step " + std::to_string(t) + ": " + message),
      agent_(std::move(agent)),
      t_(t),
      detail_(message) {}

Agent::Agent(std::string name, std::unique_ptr<Policy> policy, std::unique_ptr<Bandit> bandit)
    : name_(std::move(name)), policy_(std::move(policy)), bandit_(std::move(bandit)) {
    if (!policy_ || !bandit_) throw std::invalid_argument("agent needs a policy and a bandit");
}

Agent::Agent(const Agent& other)
    : name_(other.name_),
      policy_(other.policy_->clone()),
      bandit_(other.bandit_->clone()),
      agent_t_(other.agent_t_),
      policy_t_(other.policy_t_) {}

Agent& Agent::operator=(const Agent& other) {
    if (this != &other) *this = Agent(other);
    return *this;
}

void Agent::initialize(Rng& bandit_rng, std::size_t horizon) {
    try {
        policy_->set_parameters(bandit_->k(), bandit_->d());
        bandit_->post_initialization(bandit_rng);
        if (bandit_->precaching()) bandit_->generate_bandit_data(horizon, bandit_rng);
    } catch (const std::exception& e) {
        throw StepFault(name_, 0, e.what());
    }
    agent_t_ = 0;
    policy_t_ = 0;
}

std::optional<Agent::Step> Agent::do_step(Rng& bandit_rng, Rng& policy_rng) {
    ++agent_t_;
    try {
        const ContextSnapshot& context = bandit_->get_context(agent_t_, bandit_rng);
        context.validate();
        const std::size_t t = policy_t_ + 1;
        ActionChoice action = policy_->get_action(t, context, policy_rng);
        if (action.choice >= context.k) {
            throw ContractError("choice " + std::to_string(action.choice + 1) + " out of range 1.." +
                                std::to_string(context.k));
        }
        if (!context.is_active(action.choice)) {
            throw ContractError("choice " + std::to_string(action.choice + 1) + " is not an active arm");
        }
        if (action.propensity && !(*action.propensity > 0.0 && *action.propensity <= 1.0)) {
            throw ContractError("propensity " + std::to_string(*action.propensity) + " outside (0,1]");
        }
        std::optional<RewardOutcome> outcome = bandit_->get_reward(agent_t_, context, action, bandit_rng);
        if (!outcome) return std::nullopt;
        if (outcome->optimal_arm && *outcome->optimal_arm >= context.k) {
            throw ContractError("optimal arm out of range");
        }
        policy_->set_reward(t, context, action, *outcome);
        policy_t_ = t;
        return Step{t, action, *outcome, &context};
    } catch (const StepFault&) {
        throw;
    } catch (const std::exception& e) {
        throw StepFault(name_, agent_t_, e.what());
    }
}

void SimConfig::validate() const {
    if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
    if (simulations == 0) throw std::invalid_argument("simulations must be at least 1");
    if (worker_max && *worker_max == 0) throw std::invalid_argument("worker_max must be at least 1");
}

RunLog run_agent_simulation(Agent& agent, std::size_t sim, const SimConfig& config, Rng& bandit_rng,
                            Rng& policy_rng) {
    agent.initialize(bandit_rng, config.horizon);
    std::size_t steps = config.horizon;
    if (auto n = agent.bandit().data_length()) steps = std::min(steps, *n);

    RunLog run(sim);
    if (!agent.bandit().data_length()) run.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        auto step = agent.do_step(bandit_rng, policy_rng);
        if (!step) continue;
        std::span<const double> context;
        if (config.save_context && step->context->X) context = get_arm_context(*step->context, step->action.choice);
        std::string theta;
        if (config.save_theta) theta = agent.policy().theta().dump();
        run.append(step->t, step->action.choice, step->outcome.reward, step->outcome.optimal_reward,
                   step->outcome.optimal_arm, step->action.propensity, context, std::move(theta));
    }
    return run;
}

std::size_t worker_count(const SimConfig& config, std::size_t tasks) {
    if (tasks == 0) return 1;
    if (!config.do_parallel) return 1;
    if (config.worker_max) return std::max<std::size_t>(1, std::min(*config.worker_max, tasks));
    const std::size_t hw = std::thread::hardware_concurrency();
    const std::size_t spare = hw > 1 ? hw - 1 : 1;
    return std::min(spare, tasks);
}

SimResult simulate(std::span<const Agent> agents, const SimConfig& config) {
    config.validate();
    if (agents.empty()) throw std::invalid_argument("simulate needs at least one agent");
    std::set<std::string> names;
    for (const auto& a : agents)
        if (!names.insert(a.name()).second) throw std::invalid_argument("duplicate agent name '" + a.name() + "'");

    const std::size_t sims = config.simulations;
    const std::size_t tasks = agents.size() * sims;

    struct Slot {
        std::optional<RunLog> run;
        std::optional<SimFault> fault;
    };
    std::vector<Slot> slots(tasks);
    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex progress_mutex;

    auto work = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1, std::memory_order_relaxed);
            if (task >= tasks) return;
            const Agent& prototype = agents[task / sims];
            const std::size_t sim = task % sims + 1;
            Agent agent(prototype);
            Rng bandit_rng(derive_seed(config.global_seed, sim, Stream::bandit));
            Rng policy_rng(derive_seed(config.global_seed, sim, Stream::policy));
            try {
                slots[task].run = run_agent_simulation(agent, sim, config, bandit_rng, policy_rng);
            } catch (const StepFault& f) {
                slots[task].fault = SimFault{prototype.name(), sim, f.t(), f.detail()};
            } catch (const std::exception& e) {
                slots[task].fault = SimFault{prototype.name(), sim, agent.agent_t(), e.what()};
            }
            if (config.on_progress) {
                std::lock_guard lock(progress_mutex);
                config.on_progress(++done, tasks);
            }
        }
    };

    const std::size_t workers = worker_count(config, tasks);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    }

    SimResult result;
    for (std::size_t task = 0; task < tasks; ++task) {
        const Agent& agent = agents[task / sims];
        if (slots[task].run) {
            result.history.add_run(agent.name(), agent.bandit().k(), std::move(*slots[task].run));
        } else if (slots[task].fault) {
            result.faults.push_back(std::move(*slots[task].fault));
        }
    }
    result.history.canonical_sort();
    if (config.reindex) result.history.reindex();
    std::sort(result.faults.begin(), result.faults.end(), [](const SimFault& a, const SimFault& b) {
        return std::tie(a.agent, a.sim) < std::tie(b.agent, b.sim);
    });
    return result;
}

}  // namespace cbsim
