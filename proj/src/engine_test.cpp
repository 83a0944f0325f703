#include <doctest.h>

#include <map>
#include <string>
#include <vector>

#include "cbsim/bandit.hpp"
#include "cbsim/engine.hpp"
#include "cbsim/offline.hpp"
#include "cbsim/policies.hpp"

using namespace cbsim;

namespace {

/// Records every contract call into a shared trace.
struct Trace {
    std::vector<std::string> calls;
};

class TracingBandit final : public Bandit {
public:
    TracingBandit(Trace* trace, bool skip_odd) : trace_(trace), skip_odd_(skip_odd) {
        context_.k = 2;
    }
    std::unique_ptr<Bandit> clone() const override { return std::make_unique<TracingBandit>(*this); }
    std::string_view class_name() const override { return "TracingBandit"; }
    std::size_t k() const override { return 2; }
    std::optional<std::size_t> d() const override { return std::nullopt; }
    const ContextSnapshot& get_context(std::size_t, Rng&) override {
        trace_->calls.push_back("get_context");
        return context_;
    }
    std::optional<RewardOutcome> get_reward(std::size_t t, const ContextSnapshot&, const ActionChoice&,
                                            Rng&) override {
        trace_->calls.push_back("get_reward");
        if (skip_odd_ && t % 2 == 1) return std::nullopt;
        return RewardOutcome{1.0, 1.0, 0};
    }

private:
    Trace* trace_;
    bool skip_odd_;
    ContextSnapshot context_;
};

class TracingPolicy final : public Policy {
public:
    explicit TracingPolicy(Trace* trace, ArmIndex choice = 0, std::optional<double> propensity = std::nullopt)
        : trace_(trace), choice_(choice), propensity_(propensity) {}
    std::unique_ptr<Policy> clone() const override { return std::make_unique<TracingPolicy>(*this); }
    std::string_view class_name() const override { return "TracingPolicy"; }
    void set_parameters(std::size_t, std::optional<std::size_t>) override { trace_->calls.push_back("set_parameters"); }
    ActionChoice get_action(std::size_t t, const ContextSnapshot&, Rng&) override {
        trace_->calls.push_back("get_action:" + std::to_string(t));
        return {choice_, propensity_};
    }
    void set_reward(std::size_t t, const ContextSnapshot&, const ActionChoice&, const RewardOutcome&) override {
        trace_->calls.push_back("set_reward:" + std::to_string(t));
    }
    nlohmann::json theta() const override { return {{"calls", trace_->calls.size()}}; }

private:
    Trace* trace_;
    ArmIndex choice_;
    std::optional<double> propensity_;
};

}  // namespace

TEST_CASE("types: snapshot validation and arm context") {
    ContextSnapshot c;
    c.k = 2;
    c.d = 3;
    c.X = Matrix::from_row_major(3, 2, std::vector<double>{1, 4, 2, 5, 3, 6});
    CHECK_NOTHROW(c.validate());
    auto col = get_arm_context(c, 1);
    CHECK(std::vector<double>(col.begin(), col.end()) == std::vector<double>{4, 5, 6});
    CHECK_THROWS_AS(get_arm_context(c, 2), ContractError);

    ContextSnapshot one;
    one.k = 2;
    one.d = 1;
    one.X = Matrix::from_row_major(1, 2, std::vector<double>{0.3, 0.7});
    CHECK(get_arm_context(one, 0)[0] == 0.3);

    ContextSnapshot bare;
    bare.k = 2;
    CHECK_THROWS_AS(get_arm_context(bare, 0), ContractError);

    c.arms = std::vector<ArmIndex>{1, 1};
    CHECK_THROWS_AS(c.validate(), ContractError);
    c.arms = std::vector<ArmIndex>{2};
    CHECK_THROWS_AS(c.validate(), ContractError);
    c.X = Matrix(2, 2);
    c.arms.reset();
    CHECK_THROWS_AS(c.validate(), ContractError);
    ContextSnapshot empty;
    CHECK_THROWS_AS(empty.validate(), ContractError);
}

TEST_CASE("which_max_tied") {
    Rng rng(1);
    const std::vector<double> unique{0.2, 0.8, 0.1};
    CHECK(which_max_tied(unique, rng) == 1);
    const std::vector<double> single{7.0};
    CHECK(which_max_tied(single, rng) == 0);

    const std::vector<double> tied{0.5, 0.5, 0.1};
    int first = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto a = which_max_tied(tied, rng);
        REQUIRE(a < 2);
        first += a == 0;
    }
    CHECK(std::abs(first / double(n) - 0.5) < 0.02);

    const std::vector<double> bad{0.1, std::nan("")};
    CHECK_THROWS_AS(which_max_tied(bad, rng), ContractError);
    CHECK_THROWS_AS(which_max_tied(std::vector<double>{}, rng), ContractError);
}

TEST_CASE("tie set is invariant under positive scaling") {
    ContextSnapshot c;
    c.k = 5;
    const std::vector<double> means{0.3, 0.7, 0.7, 0.1, 0.7};
    std::vector<double> scaled = means;
    for (auto& v : scaled) v *= 3.5;
    CHECK(max_tie_set(means, c) == max_tie_set(scaled, c));
    CHECK(max_tie_set(means, c) == std::vector<ArmIndex>{1, 2, 4});
}

TEST_CASE("do_step calls the contract in order") {
    Trace trace;
    Agent agent("traced", std::make_unique<TracingPolicy>(&trace), std::make_unique<TracingBandit>(&trace, false));
    Rng b(1), p(2);
    agent.initialize(b, 3);
    for (int i = 0; i < 3; ++i) REQUIRE(agent.do_step(b, p));
    CHECK(trace.calls == std::vector<std::string>{"set_parameters", "get_context", "get_action:1", "get_reward",
                                                   "set_reward:1", "get_context", "get_action:2", "get_reward",
                                                   "set_reward:2", "get_context", "get_action:3", "get_reward",
                                                   "set_reward:3"});
}

TEST_CASE("a null reward skips set_reward and holds policy_t") {
    Trace trace;
    Agent agent("skipper", std::make_unique<TracingPolicy>(&trace), std::make_unique<TracingBandit>(&trace, true));
    Rng b(1), p(2);
    agent.initialize(b, 4);
    CHECK_FALSE(agent.do_step(b, p));
    CHECK(agent.agent_t() == 1);
    CHECK(agent.policy_t() == 0);
    auto step = agent.do_step(b, p);
    REQUIRE(step);
    CHECK(step->t == 1);
    CHECK(agent.agent_t() == 2);
    CHECK(agent.policy_t() == 1);
    CHECK(trace.calls.back() == "set_reward:1");
    CHECK(std::count(trace.calls.begin(), trace.calls.end(), "get_reward") == 2);
}

TEST_CASE("one-arm bandit with a random policy") {
    Agent agent("solo", std::make_unique<RandomPolicy>(), std::make_unique<BasicBernoulliBandit>(std::vector<double>{1.0}));
    Rng b(1), p(2);
    agent.initialize(b, 1);
    auto step = agent.do_step(b, p);
    REQUIRE(step);
    CHECK(step->action.choice == 0);
    CHECK(step->outcome.reward == 1.0);
    CHECK(step->action.propensity == 1.0);
}

TEST_CASE("greedy policy follows its single observation") {
    auto policy = std::make_unique<EpsilonGreedyPolicy>(0.0);
    policy->set_parameters(3, std::nullopt);
    ContextSnapshot c;
    c.k = 3;
    policy->set_reward(1, c, {1, std::nullopt}, {1.0, std::nullopt, std::nullopt});
    Rng rng(3);
    for (int i = 0; i < 20; ++i) CHECK(policy->get_action(2, c, rng).choice == 1);
}

TEST_CASE("contract violations become step faults") {
    Trace trace;
    Agent out_of_range("bad", std::make_unique<TracingPolicy>(&trace, 5), std::make_unique<TracingBandit>(&trace, false));
    Rng b(1), p(2);
    out_of_range.initialize(b, 1);
    try {
        out_of_range.do_step(b, p);
        FAIL("expected a fault");
    } catch (const StepFault& f) {
        CHECK(f.agent() == "bad");
        CHECK(f.t() == 1);
    }

    Agent bad_prop("prop", std::make_unique<TracingPolicy>(&trace, 0, 1.5), std::make_unique<TracingBandit>(&trace, false));
    bad_prop.initialize(b, 1);
    CHECK_THROWS_AS(bad_prop.do_step(b, p), StepFault);
}

TEST_CASE("simulate counts records and is deterministic") {
    std::vector<Agent> agents;
    agents.emplace_back("eg", std::make_unique<EpsilonGreedyPolicy>(0.1),
                        std::make_unique<BasicBernoulliBandit>(std::vector<double>{0.5, 0.2, 0.1}));
    SimConfig cfg;
    cfg.horizon = 10;
    cfg.simulations = 2;
    cfg.global_seed = 42;
    const auto r1 = simulate(agents, cfg);
    CHECK(r1.faults.empty());
    CHECK(r1.history.record_count() == 20);
    const auto r2 = simulate(agents, cfg);
    CHECK(r1.history.to_csv() == r2.history.to_csv());

    cfg.global_seed = 43;
    CHECK(simulate(agents, cfg).history.to_csv() != r1.history.to_csv());
}

TEST_CASE("history is independent of the worker count") {
    std::vector<Agent> agents;
    const Matrix w = Matrix::from_row_major(2, 3, std::vector<double>{0.5, 0.7, 0.1, 0.7, 0.1, 0.3});
    agents.emplace_back("linucb", std::make_unique<LinUcbDisjointPolicy>(0.6),
                        std::make_unique<ContextualBernoulliBandit>(w));
    agents.emplace_back("eg", std::make_unique<EpsilonGreedyPolicy>(0.4), std::make_unique<ContextualBernoulliBandit>(w));
    agents.emplace_back("ts", std::make_unique<ThompsonSamplingPolicy>(), std::make_unique<ContextualBernoulliBandit>(w));
    SimConfig cfg;
    cfg.horizon = 50;
    cfg.simulations = 12;
    cfg.global_seed = 5;
    cfg.save_context = true;
    cfg.save_theta = true;
    std::string reference;
    for (std::size_t workers : {1u, 2u, 4u, 7u}) {
        cfg.worker_max = workers;
        const auto csv = simulate(agents, cfg).history.to_csv();
        if (reference.empty()) reference = csv;
        CHECK(csv == reference);
    }
    cfg.do_parallel = false;
    CHECK(simulate(agents, cfg).history.to_csv() == reference);
}

TEST_CASE("agents in the same simulation face the same environment") {
    const Matrix w = Matrix::from_row_major(3, 3, std::vector<double>{0.6, 0.2, 0.2, 0.2, 0.6, 0.2, 0.2, 0.2, 0.6});
    Agent a("a", std::make_unique<LinUcbDisjointPolicy>(1.0), std::make_unique<ContextualBernoulliBandit>(w));
    Agent b("b", std::make_unique<RandomPolicy>(), std::make_unique<ContextualBernoulliBandit>(w));
    SimConfig cfg;
    cfg.horizon = 200;
    cfg.save_context = true;
    for (std::size_t sim : {1u, 2u, 9u}) {
        std::vector<std::uint64_t> tape_a, tape_b;
        Rng ba(derive_seed(cfg.global_seed, sim, Stream::bandit)), pa(derive_seed(cfg.global_seed, sim, Stream::policy));
        Rng bb(derive_seed(cfg.global_seed, sim, Stream::bandit)), pb(derive_seed(cfg.global_seed, sim, Stream::policy));
        ba.record_to(&tape_a);
        bb.record_to(&tape_b);
        Agent ca(a), cb(b);
        const RunLog ra = run_agent_simulation(ca, sim, cfg, ba, pa);
        const RunLog rb = run_agent_simulation(cb, sim, cfg, bb, pb);
        CHECK(tape_a == tape_b);
        CHECK_FALSE(tape_a.empty());
        // One-hot contexts recycled to every arm, so the chosen arm's column is the active feature.
        for (std::size_t i = 0; i < ra.size(); ++i) {
            const auto xa = ra.context(i), xb = rb.context(i);
            REQUIRE(std::equal(xa.begin(), xa.end(), xb.begin(), xb.end()));
            CHECK(ra.optimal_arm(i) == rb.optimal_arm(i));
        }
    }
}

TEST_CASE("a faulting task leaves the others intact") {
    class Flaky final : public Bandit {
    public:
        std::unique_ptr<Bandit> clone() const override { return std::make_unique<Flaky>(*this); }
        std::string_view class_name() const override { return "Flaky"; }
        std::size_t k() const override { return 2; }
        std::optional<std::size_t> d() const override { return std::nullopt; }
        void post_initialization(Rng& rng) override { fail_ = rng.uniform() < 0.5; }
        const ContextSnapshot& get_context(std::size_t, Rng&) override {
            c_.k = 2;
            return c_;
        }
        std::optional<RewardOutcome> get_reward(std::size_t t, const ContextSnapshot&, const ActionChoice&,
                                                Rng&) override {
            if (fail_ && t == 3) throw ContractError("boom");
            return RewardOutcome{1.0, std::nullopt, std::nullopt};
        }

    private:
        bool fail_ = false;
        ContextSnapshot c_;
    };
    std::vector<Agent> agents;
    agents.emplace_back("flaky", std::make_unique<RandomPolicy>(), std::make_unique<Flaky>());
    SimConfig cfg;
    cfg.horizon = 5;
    cfg.simulations = 40;
    cfg.worker_max = 3;
    const auto r = simulate(agents, cfg);
    REQUIRE_FALSE(r.faults.empty());
    CHECK(r.faults.size() < 40);
    CHECK(r.history.record_count() == 5 * (40 - r.faults.size()));
    for (const auto& f : r.faults) {
        CHECK(f.agent == "flaky");
        CHECK(f.t == 3);
        CHECK(f.message == "boom");
    }
}

TEST_CASE("offline runs stop when the data runs out") {
    auto data = std::make_shared<LoggedDataset>(2, 1, false);
    for (int i = 0; i < 6; ++i) data->push_back(i % 2, 1.0, std::nullopt, std::vector<double>{1.0});
    std::vector<Agent> agents;
    agents.emplace_back("always1", std::make_unique<EpsilonGreedyPolicy>(0.0), std::make_unique<ReplayBandit>(data));
    SimConfig cfg;
    cfg.horizon = 100;
    cfg.simulations = 3;
    const auto r = simulate(agents, cfg);
    CHECK(r.faults.empty());
    for (const auto& run : r.history.agents().front().runs) {
        CHECK(run.size() <= 6);
        for (std::size_t i = 0; i < run.size(); ++i) CHECK(run.t(i) == i + 1);
    }
}

TEST_CASE("reindex truncates to the shortest run") {
    auto data = std::make_shared<LoggedDataset>(2, 0, false);
    for (int i = 0; i < 200; ++i) data->push_back(i % 2, 1.0, std::nullopt, {});
    std::vector<Agent> agents;
    agents.emplace_back("random", std::make_unique<RandomPolicy>(), std::make_unique<ReplayBandit>(data));
    SimConfig cfg;
    cfg.horizon = 200;
    cfg.simulations = 8;
    cfg.reindex = false;
    const auto raw = simulate(agents, cfg);
    std::size_t shortest = SIZE_MAX, longest = 0;
    for (const auto& run : raw.history.agents().front().runs) {
        shortest = std::min(shortest, run.size());
        longest = std::max(longest, run.size());
    }
    REQUIRE(shortest < longest);
    cfg.reindex = true;
    const auto re = simulate(agents, cfg);
    for (const auto& run : re.history.agents().front().runs) CHECK(run.size() == shortest);
}

TEST_CASE("config validation and worker counts") {
    SimConfig cfg;
    cfg.horizon = 0;
    CHECK_THROWS(cfg.validate());
    cfg.horizon = 1;
    cfg.worker_max = 4;
    CHECK(worker_count(cfg, 10) == 4);
    CHECK(worker_count(cfg, 2) == 2);
    cfg.do_parallel = false;
    CHECK(worker_count(cfg, 10) == 1);

    std::vector<Agent> dup;
    dup.emplace_back("x", std::make_unique<RandomPolicy>(), std::make_unique<BasicBernoulliBandit>(std::vector<double>{0.5}));
    dup.emplace_back("x", std::make_unique<RandomPolicy>(), std::make_unique<BasicBernoulliBandit>(std::vector<double>{0.5}));
    CHECK_THROWS_AS(simulate(dup, SimConfig{}), std::invalid_argument);
}
