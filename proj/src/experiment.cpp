#include "cbsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "cbsim/bandit.hpp"
#include "cbsim/offline.hpp"
#include "cbsim/policies.hpp"

namespace cbsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class ParamType { real, integer, boolean, string, real_list, matrix };

struct Param {
    const char* name;
    ParamType type;
    bool required;
    const char* fallback;  // shown in the registry listing
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool lo_open = false;
};

struct Entry {
    const char* id;
    const char* summary;
    std::vector<Param> params;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<Entry>& bandit_registry() {
    static const std::vector<Entry> r = {
        {"basic_bernoulli", "context-free Bernoulli arms", {{"weights", ParamType::real_list, true, nullptr, 0, 1}, {"optimal", ParamType::string, false, "expected"}}},
        {"basic_gaussian", "context-free Gaussian arms",
         {{"mu", ParamType::real_list, true, nullptr}, {"sigma", ParamType::real_list, true, nullptr, 0, kInf, true}}},
        {"basic_poisson", "Poisson(2) threshold arms", {{"weights", ParamType::real_list, true, nullptr}}},
        {"contextual_bernoulli", "one active feature per step, Bernoulli arms",
         {{"weights", ParamType::matrix, true, nullptr, 0, 1}, {"optimal", ParamType::string, false, "expected"}}},
        {"offline_propensity", "logged data, inverse-propensity weighted rewards",
         {{"path", ParamType::string, true, nullptr},
          {"k", ParamType::integer, true, nullptr, 1},
          {"d", ParamType::integer, true, nullptr, 0},
          {"zero_based", ParamType::boolean, false, "false"}}},
        {"offline_replay", "logged data, replay evaluation",
         {{"path", ParamType::string, true, nullptr},
          {"k", ParamType::integer, true, nullptr, 1},
          {"d", ParamType::integer, true, nullptr, 0},
          {"propensity", ParamType::boolean, false, "false"},
          {"zero_based", ParamType::boolean, false, "false"}}},
    };
    return r;
}

const std::vector<Entry>& policy_registry() {
    static const std::vector<Entry> r = {
        {"epsilon_first", "explore uniformly for ceil(epsilon*N) steps, then exploit",
         {{"epsilon", ParamType::real, false, "0.1", 0, 1},
          {"N", ParamType::integer, false, "horizon", 1},
          {"time_steps", ParamType::integer, false, nullptr, 0}}},
        {"epsilon_greedy", "explore with probability epsilon", {{"epsilon", ParamType::real, false, "0.1", 0, 1}}},
        {"epsilon_greedy_annealing", "epsilon-greedy with epsilon = 1/ln(100t + 0.001)", {}},
        {"linucb_disjoint", "LinUCB with disjoint linear models",
         {{"alpha", ParamType::real, true, nullptr, 0}, {"solver", ParamType::string, false, "direct"}}},
        {"oracle", "plays the arm with the highest expected reward", {}},
        {"random", "uniform over arms", {}},
        {"thompson", "Beta-Bernoulli Thompson sampling",
         {{"alpha0", ParamType::real, false, "1", 0, kInf, true}, {"beta0", ParamType::real, false, "1", 0, kInf, true}}},
        {"ucb1", "UCB1", {}},
    };
    return r;
}

const Entry* find_entry(const std::vector<Entry>& reg, const std::string& id) {
    for (const auto& e : reg)
        if (id == e.id) return &e;
    return nullptr;
}

std::string range_text(const Param& p) {
    const bool has_lo = std::isfinite(p.lo), has_hi = std::isfinite(p.hi);
    auto num = [](double v) {
        std::ostringstream s;
        s << v;
        return s.str();
    };
    if (has_lo && has_hi) return std::string(p.lo_open ? "(" : "[") + num(p.lo) + "," + num(p.hi) + "]";
    if (has_lo) return std::string(p.lo_open ? "(" : "[") + num(p.lo) + ",inf)";
    if (has_hi) return "(-inf," + num(p.hi) + "]";
    return {};
}

bool in_range(const Param& p, double v) {
    if (!std::isfinite(v)) return false;
    if (p.lo_open ? !(v > p.lo) : !(v >= p.lo)) return false;
    return v <= p.hi;
}

const char* type_name(ParamType t) {
    switch (t) {
        case ParamType::real: return "real";
        case ParamType::integer: return "integer";
        case ParamType::boolean: return "bool";
        case ParamType::string: return "string";
        case ParamType::real_list: return "real[]";
        case ParamType::matrix: return "{d,k,values}";
    }
    return "?";
}

/// Checks `params` against `entry`, appending problems prefixed by `where`.
void check_params(const Entry& entry, const json& params, const std::string& where, std::vector<std::string>& errors) {
    if (!params.is_object()) {
        errors.push_back(where + ": params must be an object");
        return;
    }
    for (const auto& [key, value] : params.items()) {
        const bool known = std::any_of(entry.params.begin(), entry.params.end(),
                                       [&](const Param& p) { return key == p.name; });
        if (!known) errors.push_back(where + ": unknown parameter '" + key + "'");
    }
    for (const auto& p : entry.params) {
        const std::string at = where + ": " + p.name;
        if (!params.contains(p.name)) {
            if (p.required) errors.push_back(at + " is required");
            continue;
        }
        const json& v = params.at(p.name);
        const std::string range = range_text(p);
        switch (p.type) {
            case ParamType::real:
                if (!v.is_number()) errors.push_back(at + " must be a number");
                else if (!in_range(p, v.get<double>())) errors.push_back(at + " out of " + range);
                break;
            case ParamType::integer:
                if (!v.is_number_integer()) errors.push_back(at + " must be an integer");
                else if (!in_range(p, v.get<double>())) errors.push_back(at + " out of " + range);
                break;
            case ParamType::boolean:
                if (!v.is_boolean()) errors.push_back(at + " must be true or false");
                break;
            case ParamType::string:
                if (!v.is_string()) errors.push_back(at + " must be a string");
                break;
            case ParamType::real_list: {
                if (!v.is_array() || v.empty()) {
                    errors.push_back(at + " must be a non-empty array of numbers");
                    break;
                }
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (!v[i].is_number()) {
                        errors.push_back(at + "[" + std::to_string(i) + "] must be a number");
                    } else if (!in_range(p, v[i].get<double>())) {
                        errors.push_back(at + "[" + std::to_string(i) + "] out of " + range);
                    }
                }
                break;
            }
            case ParamType::matrix: {
                if (!v.is_object() || !v.contains("d") || !v.contains("k") || !v.contains("values")) {
                    errors.push_back(at + " must be an object with d, k and row-major values");
                    break;
                }
                const json &d = v["d"], &k = v["k"], &values = v["values"];
                if (!d.is_number_integer() || d.get<long long>() < 1 || !k.is_number_integer() ||
                    k.get<long long>() < 1) {
                    errors.push_back(at + ": d and k must be positive integers");
                    break;
                }
                if (!values.is_array() || values.size() != d.get<std::size_t>() * k.get<std::size_t>()) {
                    errors.push_back(at + ": values must hold d*k = " +
                                     std::to_string(d.get<std::size_t>() * k.get<std::size_t>()) + " numbers");
                    break;
                }
                for (std::size_t i = 0; i < values.size(); ++i) {
                    if (!values[i].is_number() || !in_range(p, values[i].get<double>())) {
                        errors.push_back(at + ": values[" + std::to_string(i) + "] out of " + range);
                    }
                }
                break;
            }
        }
    }
}

template <class T>
T param_or(const json& params, const char* name, T fallback) {
    return params.contains(name) ? params.at(name).get<T>() : fallback;
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

std::string default_agent_name(const std::string& policy) {
    static const std::map<std::string, std::string> names = {
        {"epsilon_first", "EpsilonFirst"},   {"epsilon_greedy", "EpsilonGreedy"},
        {"epsilon_greedy_annealing", "EpsilonGreedyAnnealing"},
        {"linucb_disjoint", "LinUCBDisjoint"}, {"oracle", "Oracle"},
        {"random", "Random"},                {"thompson", "ThompsonSampling"},
        {"ucb1", "UCB1"},
    };
    auto it = names.find(policy);
    return it == names.end() ? policy : it->second;
}

std::vector<double> real_list(const json& v) { return v.get<std::vector<double>>(); }

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration:";
          for (const auto& e : errors) msg += "\n  " + e;
          return msg;
      }()),
      errors_(std::move(errors)) {}

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir, std::optional<std::size_t> default_workers) {
    std::vector<std::string> errors;
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    if (!doc.is_object()) throw ConfigError({"configuration must be a JSON object"});

    static const std::set<std::string> kTop = {"horizon", "simulations", "seed",    "workers", "do_parallel",
                                               "save_context", "save_theta", "reindex", "bandit", "agents", "output"};
    for (const auto& [key, value] : doc.items())
        if (!kTop.count(key)) errors.push_back("unknown key '" + key + "'");

    auto positive = [&](const char* key, std::size_t& out, bool required) {
        if (!doc.contains(key)) {
            if (required) errors.push_back(std::string(key) + " is required");
            return;
        }
        const json& v = doc.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 1) {
            errors.push_back(std::string(key) + " must be a positive integer");
            return;
        }
        out = v.get<std::size_t>();
    };
    auto flag = [&](const char* key, bool& out) {
        if (!doc.contains(key)) return;
        if (!doc.at(key).is_boolean()) errors.push_back(std::string(key) + " must be true or false");
        else out = doc.at(key).get<bool>();
    };
    positive("horizon", cfg.sim.horizon, true);
    positive("simulations", cfg.sim.simulations, true);
    if (doc.contains("seed")) {
        const json& s = doc.at("seed");
        if (!s.is_number_integer()) errors.push_back("seed must be an integer");
        else cfg.sim.global_seed = s.is_number_unsigned() ? s.get<std::uint64_t>()
                                                           : static_cast<std::uint64_t>(s.get<std::int64_t>());
    }
    std::size_t workers = 0;
    positive("workers", workers, false);
    if (workers > 0) cfg.sim.worker_max = workers;
    else if (default_workers) cfg.sim.worker_max = *default_workers;
    flag("do_parallel", cfg.sim.do_parallel);
    flag("save_context", cfg.sim.save_context);
    flag("save_theta", cfg.sim.save_theta);
    flag("reindex", cfg.sim.reindex);

    // bandit
    if (!doc.contains("bandit") || !doc.at("bandit").is_object()) {
        errors.push_back("bandit must be an object with a type");
    } else {
        const json& b = doc.at("bandit");
        for (const auto& [key, value] : b.items())
            if (key != "type" && key != "params") errors.push_back("bandit: unknown key '" + key + "'");
        if (!b.contains("type") || !b.at("type").is_string()) {
            errors.push_back("bandit: type is required");
        } else {
            cfg.bandit.type = b.at("type").get<std::string>();
            cfg.bandit.params = b.value("params", json::object());
            const Entry* e = find_entry(bandit_registry(), cfg.bandit.type);
            if (e == nullptr) {
                errors.push_back("bandit: unknown bandit '" + cfg.bandit.type + "'");
            } else {
                const std::size_t before = errors.size();
                check_params(*e, cfg.bandit.params, "bandit (" + cfg.bandit.type + ")", errors);
                const json& p = cfg.bandit.params;
                if (errors.size() == before && cfg.bandit.type == "basic_gaussian" &&
                    p.at("mu").size() != p.at("sigma").size()) {
                    errors.push_back("bandit (basic_gaussian): mu and sigma differ in length");
                }
                if (p.is_object() && p.contains("optimal") && p.at("optimal") != "expected" &&
                    p.at("optimal") != "realized") {
                    errors.push_back("bandit (" + cfg.bandit.type + "): optimal must be expected or realized");
                }
                if (errors.size() == before && p.contains("path")) {
                    const fs::path log = resolve(base_dir, p.at("path").get<std::string>());
                    if (!fs::is_regular_file(log)) {
                        errors.push_back("bandit (" + cfg.bandit.type + "): log file not found: " + log.string());
                    }
                }
            }
        }
    }

    // agents
    if (!doc.contains("agents") || !doc.at("agents").is_array() || doc.at("agents").empty()) {
        errors.push_back("agents must be a non-empty array");
    } else {
        std::set<std::string> names;
        const json& agents = doc.at("agents");
        for (std::size_t i = 0; i < agents.size(); ++i) {
            const json& a = agents[i];
            const std::string where = "agents[" + std::to_string(i) + "]";
            if (!a.is_object() || !a.contains("policy") || !a.at("policy").is_string()) {
                errors.push_back(where + ": policy is required");
                continue;
            }
            for (const auto& [key, value] : a.items())
                if (key != "policy" && key != "params" && key != "name")
                    errors.push_back(where + ": unknown key '" + key + "'");
            AgentSpec spec;
            spec.policy = a.at("policy").get<std::string>();
            spec.params = a.value("params", json::object());
            if (a.contains("name") && !a.at("name").is_string()) errors.push_back(where + ": name must be a string");
            spec.name = a.contains("name") && a.at("name").is_string() ? a.at("name").get<std::string>()
                                                                       : default_agent_name(spec.policy);
            const Entry* e = find_entry(policy_registry(), spec.policy);
            if (e == nullptr) {
                errors.push_back(where + ": unknown policy '" + spec.policy + "'");
            } else {
                check_params(*e, spec.params, where + " (" + spec.policy + ")", errors);
                if (spec.policy == "linucb_disjoint" && spec.params.is_object() && spec.params.contains("solver")) {
                    const json& s = spec.params.at("solver");
                    if (s != "direct" && s != "sherman_morrison") {
                        errors.push_back(where + " (linucb_disjoint): solver must be direct or sherman_morrison");
                    }
                }
            }
            if (!names.insert(spec.name).second) errors.push_back(where + ": duplicate agent name '" + spec.name + "'");
            cfg.agents.push_back(std::move(spec));
        }
    }

    // output
    cfg.output_dir = base_dir;
    if (doc.contains("output")) {
        const json& o = doc.at("output");
        if (!o.is_object()) {
            errors.push_back("output must be an object");
        } else {
            for (const auto& [key, value] : o.items())
                if (key != "dir" && key != "history" && key != "summary" && key != "plots")
                    errors.push_back("output: unknown key '" + key + "'");
            auto path_of = [&](const char* key) -> std::optional<fs::path> {
                if (!o.contains(key)) return std::nullopt;
                if (!o.at(key).is_string()) {
                    errors.push_back(std::string("output: ") + key + " must be a path string");
                    return std::nullopt;
                }
                return fs::path(o.at(key).get<std::string>());
            };
            if (auto d = path_of("dir")) cfg.output_dir = resolve(base_dir, *d);
            if (auto h = path_of("history")) cfg.history = resolve(cfg.output_dir, *h);
            if (auto s = path_of("summary")) cfg.summary = resolve(cfg.output_dir, *s);
            if (o.contains("plots")) {
                const json& plots = o.at("plots");
                if (!plots.is_array()) errors.push_back("output: plots must be an array");
                for (std::size_t i = 0; plots.is_array() && i < plots.size(); ++i) {
                    const json& p = plots[i];
                    const std::string where = "output.plots[" + std::to_string(i) + "]";
                    if (!p.is_object()) {
                        errors.push_back(where + " must be an object");
                        continue;
                    }
                    PlotSpec spec;
                    try {
                        static const std::set<std::string> kKeys = {"kind",     "regret", "rate",         "dispersion",
                                                                    "interval", "smooth", "limit_agents", "limit_context",
                                                                    "file",     "svg"};
                        for (const auto& [key, value] : p.items())
                            if (!kKeys.count(key)) errors.push_back(where + ": unknown key '" + key + "'");
                        spec.options.kind = parse_plot_kind(p.value("kind", std::string("cumulative")));
                        spec.options.regret = p.value("regret", true);
                        spec.options.rate = p.value("rate", false);
                        spec.options.dispersion = parse_dispersion(p.value("dispersion", std::string("none")));
                        const long long interval = p.value("interval", 1LL);
                        if (interval < 1) throw std::invalid_argument("interval must be at least 1");
                        spec.options.interval = static_cast<std::size_t>(interval);
                        spec.options.smooth = p.value("smooth", false);
                        spec.options.limit_agents = p.value("limit_agents", std::vector<std::string>{});
                        if (p.contains("limit_context")) {
                            const long long f = p.at("limit_context").get<long long>();
                            if (f < 1) throw std::invalid_argument("limit_context must be a feature number >= 1");
                            spec.options.limit_context = static_cast<std::size_t>(f);
                        }
                        const std::string file = p.value(
                            "file", "plot_" + std::string(plot_kind_name(spec.options.kind)) + "_" +
                                        std::to_string(i + 1) + ".csv");
                        spec.table = resolve(cfg.output_dir, file);
                        if (p.contains("svg")) spec.svg = resolve(cfg.output_dir, p.at("svg").get<std::string>());
                    } catch (const std::exception& e) {
                        errors.push_back(where + ": " + e.what());
                        continue;
                    }
                    cfg.plots.push_back(std::move(spec));
                }
            }
        }
    }

    if (!errors.empty()) throw ConfigError(std::move(errors));
    return cfg;
}

ExperimentConfig parse_config(const fs::path& path, std::optional<std::size_t> default_workers) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot read config file " + path.string()});
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({path.string() + ": " + e.what()});
    }
    return parse_config(doc, path.parent_path().empty() ? fs::path(".") : path.parent_path(), default_workers);
}

std::unique_ptr<Bandit> make_bandit(const BanditSpec& spec, const fs::path& base_dir) {
    const json& p = spec.params;
    const auto optimal =
        param_or<std::string>(p, "optimal", "expected") == "realized" ? OptimalReward::realized : OptimalReward::expected;
    if (spec.type == "basic_bernoulli") return std::make_unique<BasicBernoulliBandit>(real_list(p.at("weights")), optimal);
    if (spec.type == "basic_gaussian") {
        return std::make_unique<BasicGaussianBandit>(real_list(p.at("mu")), real_list(p.at("sigma")));
    }
    if (spec.type == "basic_poisson") return std::make_unique<BasicPoissonBandit>(real_list(p.at("weights")));
    if (spec.type == "contextual_bernoulli") {
        const json& w = p.at("weights");
        const auto values = real_list(w.at("values"));
        return std::make_unique<ContextualBernoulliBandit>(
            Matrix::from_row_major(w.at("d").get<std::size_t>(), w.at("k").get<std::size_t>(), values), optimal);
    }
    if (spec.type == "offline_replay" || spec.type == "offline_propensity") {
        const bool weighted = spec.type == "offline_propensity";
        auto data = std::make_shared<const LoggedDataset>(
            load_log(resolve(base_dir, p.at("path").get<std::string>()), p.at("k").get<std::size_t>(),
                     p.at("d").get<std::size_t>(), weighted || param_or(p, "propensity", false),
                     !param_or(p, "zero_based", false)));
        if (weighted) return std::make_unique<PropensityWeightingBandit>(std::move(data));
        return std::make_unique<ReplayBandit>(std::move(data));
    }
    throw std::invalid_argument("unknown bandit '" + spec.type + "'");
}

std::unique_ptr<Policy> make_policy(const AgentSpec& spec, std::size_t horizon) {
    const json& p = spec.params;
    if (spec.policy == "epsilon_greedy") return std::make_unique<EpsilonGreedyPolicy>(param_or(p, "epsilon", 0.1));
    if (spec.policy == "epsilon_greedy_annealing") return std::make_unique<EpsilonGreedyAnnealingPolicy>();
    if (spec.policy == "epsilon_first") {
        if (p.contains("time_steps")) return std::make_unique<EpsilonFirstPolicy>(p.at("time_steps").get<std::uint64_t>());
        return std::make_unique<EpsilonFirstPolicy>(EpsilonFirstPolicy::from_epsilon(
            param_or(p, "epsilon", 0.1), param_or<std::uint64_t>(p, "N", horizon)));
    }
    if (spec.policy == "ucb1") return std::make_unique<Ucb1Policy>();
    if (spec.policy == "thompson") {
        return std::make_unique<ThompsonSamplingPolicy>(param_or(p, "alpha0", 1.0), param_or(p, "beta0", 1.0));
    }
    if (spec.policy == "linucb_disjoint") {
        const auto solver = param_or<std::string>(p, "solver", "direct") == "sherman_morrison"
                                ? LinUcbDisjointPolicy::Solver::sherman_morrison
                                : LinUcbDisjointPolicy::Solver::direct;
        return std::make_unique<LinUcbDisjointPolicy>(p.at("alpha").get<double>(), solver);
    }
    if (spec.policy == "random") return std::make_unique<RandomPolicy>();
    if (spec.policy == "oracle") return std::make_unique<OraclePolicy>();
    throw std::invalid_argument("unknown policy '" + spec.policy + "'");
}

std::vector<Agent> build_agents(const ExperimentConfig& config) {
    // One bandit is built and cloned per agent, so logged data is read once.
    const auto bandit = make_bandit(config.bandit, config.base_dir);
    std::vector<Agent> agents;
    agents.reserve(config.agents.size());
    for (const auto& spec : config.agents) {
        agents.emplace_back(spec.name, make_policy(spec, config.sim.horizon), bandit->clone());
    }
    return agents;
}

std::string list_registry() {
    std::string out;
    auto section = [&](const char* title, const std::vector<Entry>& reg) {
        out += title;
        out += ":\n";
        for (const auto& e : reg) {
            out += "  ";
            out += e.id;
            out += "  ";
            out += e.summary;
            out += '\n';
            for (const auto& p : e.params) {
                out += "    ";
                out += p.name;
                out += " : ";
                out += type_name(p.type);
                const std::string range = range_text(p);
                if (!range.empty()) out += " in " + range;
                if (p.required) out += " (required)";
                else if (p.fallback != nullptr) out += std::string(" (default ") + p.fallback + ")";
                else out += " (optional)";
                out += '\n';
            }
        }
    };
    section("bandits", bandit_registry());
    out += '\n';
    section("policies", policy_registry());
    return out;
}

int run_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& log) {
    auto event = [&](json e) { log << e.dump() << '\n' << std::flush; };
    bool failed = false;

    std::vector<Agent> agents;
    try {
        agents = build_agents(config);
    } catch (const std::exception& e) {
        event({{"event", "fault"}, {"stage", "setup"}, {"message", e.what()}});
        return 1;
    }

    SimConfig sim = config.sim;
    const std::size_t total = agents.size() * sim.simulations;
    const std::size_t every = std::max<std::size_t>(1, total / 100);
    sim.on_progress = [&](std::size_t done, std::size_t all) {
        if (done % every == 0 || done == all) event({{"event", "progress"}, {"done", done}, {"total", all}});
    };
    event({{"event", "start"},
           {"agents", agents.size()},
           {"simulations", sim.simulations},
           {"horizon", sim.horizon},
           {"workers", worker_count(sim, total)}});

    SimResult result = simulate(agents, sim);
    for (const auto& f : result.faults) {
        failed = true;
        event({{"event", "fault"}, {"agent", f.agent}, {"sim", f.sim}, {"t", f.t}, {"message", f.message}});
    }

    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    auto write_file = [&](const fs::path& path, const auto& writer) {
        try {
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            std::ofstream f(path, std::ios::binary);
            if (!f) throw std::runtime_error("cannot open for writing");
            writer(f);
            f.close();
            if (!f) throw std::runtime_error("write failed");
            event({{"event", "wrote"}, {"path", path.string()}});
        } catch (const std::exception& e) {
            failed = true;
            event({{"event", "fault"}, {"stage", "output"}, {"path", path.string()}, {"message", e.what()}});
        }
    };

    if (config.history) write_file(*config.history, [&](std::ostream& f) { result.history.write_csv(f); });

    std::string summary;
    if (result.history.empty()) {
        failed = true;
        event({{"event", "fault"}, {"stage", "summary"}, {"message", "no records were produced"}});
    } else {
        try {
            summary = summarize(result.history);
            out << summary << std::flush;
        } catch (const std::exception& e) {
            failed = true;
            event({{"event", "fault"}, {"stage", "summary"}, {"message", e.what()}});
        }
    }
    if (config.summary) {
        if (summary.empty()) {
            failed = true;
            event({{"event", "fault"}, {"stage", "output"}, {"path", config.summary->string()},
                   {"message", "no summary available"}});
        } else {
            write_file(*config.summary, [&](std::ostream& f) { f << summary; });
        }
    }

    for (const auto& plot : config.plots) {
        std::vector<PlotRow> rows;
        try {
            rows = emit_plot_series(result.history, plot.options);
        } catch (const std::exception& e) {
            failed = true;
            event({{"event", "fault"}, {"stage", "plot"}, {"path", plot.table.string()}, {"message", e.what()}});
            if (plot.svg) {
                event({{"event", "fault"}, {"stage", "plot"}, {"path", plot.svg->string()}, {"message", e.what()}});
            }
            continue;
        }
        write_file(plot.table, [&](std::ostream& f) { write_plot_csv(f, rows); });
        if (plot.svg) {
            write_file(*plot.svg, [&](std::ostream& f) {
                write_plot_svg(f, rows, std::string(plot_kind_name(plot.options.kind)));
            });
        }
    }
    event({{"event", "done"}, {"status", failed ? "failed" : "ok"}});
    return failed ? 1 : 0;
}

}  // namespace cbsim
