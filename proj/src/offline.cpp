#include "cbsim/offline.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cbsim/engine.hpp"

namespace cbsim {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    constexpr std::size_t kShown = 20;
    std::string msg = "malformed log:";
    for (std::size_t i = 0; i < problems.size() && i < kShown; ++i) msg += "\n  " + problems[i];
    if (problems.size() > kShown) msg += "\n  ... and " + std::to_string(problems.size() - kShown) + " more";
    return msg;
}

bool parse_double(std::string_view s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

void recycle(ContextSnapshot& context, std::span<const double> x) {
    Matrix& X = *context.X;
    for (std::size_t a = 0; a < X.cols(); ++a) std::copy(x.begin(), x.end(), X.col(a).begin());
}

ContextSnapshot empty_context(const LoggedDataset& data) {
    ContextSnapshot c;
    c.k = data.k();
    c.d = data.d();
    c.X = Matrix(data.d(), data.k());
    return c;
}

}  // namespace

void LoggedDataset::push_back(ArmIndex choice, double reward, std::optional<double> propensity,
                              std::span<const double> context) {
    if (choice >= k_) throw ContractError("logged action out of range");
    if (context.size() != d_) throw ContractError("logged context has wrong length");
    if (propensity.has_value() != has_propensity_) throw ContractError("propensity presence differs from dataset");
    if (propensity && !(*propensity > 0.0 && *propensity <= 1.0)) throw ContractError("propensity outside (0,1]");
    choices_.push_back(choice);
    rewards_.push_back(reward);
    if (propensity) propensities_.push_back(*propensity);
    contexts_.insert(contexts_.end(), context.begin(), context.end());
}

LoggedEvent LoggedDataset::operator[](std::size_t i) const {
    return {choices_[i], rewards_[i], has_propensity_ ? std::optional<double>(propensities_[i]) : std::nullopt,
            std::span<const double>(contexts_.data() + i * d_, d_)};
}

LogFormatError::LogFormatError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

LoggedDataset read_log(std::istream& in, std::size_t k, std::size_t d, bool has_propensity, bool one_based) {
    if (k == 0) throw std::invalid_argument("log needs k >= 1");
    LoggedDataset data(k, d, has_propensity);
    const std::size_t width = 2 + (has_propensity ? 1 : 0) + d;
    std::vector<std::string> problems;
    std::vector<double> x(d);
    std::vector<std::string_view> fields;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        fields.clear();
        std::string_view rest = line;
        while (!rest.empty()) {
            const auto start = rest.find_first_not_of(" \t\r");
            if (start == std::string_view::npos) break;
            rest.remove_prefix(start);
            const auto end = rest.find_first_of(" \t\r");
            fields.push_back(rest.substr(0, end));
            rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
        }
        if (fields.empty()) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (fields.size() != width) {
            problems.push_back(where + "expected " + std::to_string(width) + " columns, got " +
                               std::to_string(fields.size()));
            continue;
        }
        long long action = 0;
        auto [aptr, aec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), action);
        if (aec != std::errc() || aptr != fields[0].data() + fields[0].size()) {
            problems.push_back(where + "action '" + std::string(fields[0]) + "' is not an integer");
            continue;
        }
        const long long lo = one_based ? 1 : 0;
        if (action < lo || action >= lo + static_cast<long long>(k)) {
            problems.push_back(where + "action " + std::to_string(action) + " outside " + std::to_string(lo) + ".." +
                               std::to_string(lo + static_cast<long long>(k) - 1));
            continue;
        }
        double reward = 0.0;
        if (!parse_double(fields[1], reward)) {
            problems.push_back(where + "reward '" + std::string(fields[1]) + "' is not a number");
            continue;
        }
        std::optional<double> propensity;
        std::size_t col = 2;
        if (has_propensity) {
            double p = 0.0;
            if (!parse_double(fields[2], p) || !(p > 0.0 && p <= 1.0)) {
                problems.push_back(where + "propensity '" + std::string(fields[2]) + "' not in (0,1]");
                continue;
            }
            propensity = p;
            col = 3;
        }
        bool ok = true;
        for (std::size_t j = 0; j < d; ++j) {
            if (!parse_double(fields[col + j], x[j])) {
                problems.push_back(where + "feature " + std::to_string(j + 1) + " '" + std::string(fields[col + j]) +
                                   "' is not a number");
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        data.push_back(static_cast<ArmIndex>(action - lo), reward, propensity, x);
    }
    if (!problems.empty()) throw LogFormatError(std::move(problems));
    return data;
}

LoggedDataset load_log(const std::filesystem::path& path, std::size_t k, std::size_t d, bool has_propensity,
                       bool one_based) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log file " + path.string());
    return read_log(in, k, d, has_propensity, one_based);
}

void write_log(std::ostream& out, const LoggedDataset& data) {
    std::string line;
    char buf[40];
    for (std::size_t i = 0; i < data.size(); ++i) {
        const LoggedEvent e = data[i];
        line = std::to_string(e.choice + 1);
        auto put = [&](double v) {
            const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
            line += ' ';
            line.append(buf, static_cast<std::size_t>(n));
        };
        put(e.reward);
        if (e.propensity) put(*e.propensity);
        for (double v : e.context) put(v);
        line += '\n';
        out << line;
    }
}

void write_log(const std::filesystem::path& path, const LoggedDataset& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write log file " + path.string());
    write_log(out, data);
    if (!out) throw std::runtime_error("failed writing log file " + path.string());
}

// ---------------------------------------------------------------- bandits

ReplayBandit::ReplayBandit(std::shared_ptr<const LoggedDataset> data)
    : data_(std::move(data)), context_(empty_context(*data_)) {}

const ContextSnapshot& ReplayBandit::get_context(std::size_t t, Rng&) {
    if (t == 0 || t > data_->size()) throw ContractError("replay data exhausted");
    row_ = t - 1;
    recycle(context_, (*data_)[row_].context);
    return context_;
}

std::optional<RewardOutcome> ReplayBandit::get_reward(std::size_t, const ContextSnapshot&, const ActionChoice& action,
                                                      Rng&) {
    check_choice(action);
    const LoggedEvent e = (*data_)[row_];
    if (e.choice != action.choice) return std::nullopt;
    return RewardOutcome{e.reward, std::nullopt, std::nullopt};
}

PropensityWeightingBandit::PropensityWeightingBandit(std::shared_ptr<const LoggedDataset> data)
    : data_(std::move(data)), context_(empty_context(*data_)) {
    if (!data_->has_propensity()) throw ContractError("propensity weighting needs logged propensities");
}

const ContextSnapshot& PropensityWeightingBandit::get_context(std::size_t t, Rng&) {
    if (t == 0 || t > data_->size()) throw ContractError("logged data exhausted");
    row_ = t - 1;
    recycle(context_, (*data_)[row_].context);
    return context_;
}

std::optional<RewardOutcome> PropensityWeightingBandit::get_reward(std::size_t, const ContextSnapshot&,
                                                                   const ActionChoice& action, Rng&) {
    check_choice(action);
    const LoggedEvent e = (*data_)[row_];
    if (!e.propensity || !(*e.propensity > 0.0)) throw ContractError("event without a positive propensity");
    const double credited = e.choice == action.choice ? e.reward / *e.propensity : 0.0;
    return RewardOutcome{credited, std::nullopt, std::nullopt};
}

// ---------------------------------------------------------------- estimators

std::optional<double> replay_value(const RunLog& run) {
    if (run.empty()) return std::nullopt;
    double total = 0.0;
    for (double r : run.rewards()) total += r;
    return total / static_cast<double>(run.size());
}

double ips_estimate(const LoggedDataset& data, const TargetPolicy& target) {
    if (data.size() == 0) throw ContractError("IPS estimate of an empty log");
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const LoggedEvent e = data[i];
        if (!e.propensity || !(*e.propensity > 0.0)) {
            throw ContractError("event " + std::to_string(i + 1) + " has no positive propensity");
        }
        if (target(e) == e.choice) total += e.reward / *e.propensity;
    }
    return total / static_cast<double>(data.size());
}

LoggedDataset simulate_log(const Bandit& bandit, const Policy& policy, std::size_t n, std::uint64_t seed,
                           std::optional<PropensitySource> propensity) {
    Agent agent("logger", policy.clone(), bandit.clone());
    Rng bandit_rng(derive_seed(seed, 1, Stream::bandit));
    Rng policy_rng(derive_seed(seed, 1, Stream::policy));
    agent.initialize(bandit_rng, n);
    const std::size_t d = bandit.d().value_or(0);
    LoggedDataset data(bandit.k(), d, propensity.has_value());

    // Exact propensities must be taken before the step mutates theta, so the
    // four calls are driven by hand here.
    Policy& logger = agent.policy();
    Bandit& env = agent.bandit();
    for (std::size_t t = 1; t <= n; ++t) {
        const ContextSnapshot& context = env.get_context(t, bandit_rng);
        ActionChoice action = logger.get_action(t, context, policy_rng);
        std::optional<double> p;
        if (propensity == PropensitySource::reported) {
            if (!action.propensity) throw ContractError("logging policy reports no propensity");
            p = action.propensity;
        } else if (propensity == PropensitySource::exact) {
            p = logger.selection_probability(t, context, action.choice);
            if (!p) throw ContractError("logging policy has no closed-form selection probability");
        }
        auto outcome = env.get_reward(t, context, action, bandit_rng);
        if (!outcome) throw ContractError("logging bandit gave no reward");
        std::span<const double> x;
        if (d > 0) x = get_arm_context(context, action.choice);
        data.push_back(action.choice, outcome->reward, p, x);
        logger.set_reward(t, context, action, *outcome);
    }
    return data;
}

}  // namespace cbsim
