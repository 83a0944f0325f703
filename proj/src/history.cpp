#include "cbsim/history.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cbsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void put_real(std::string& line, double v) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    line.append(buf, static_cast<std::size_t>(n));
}

void put_uint(std::string& line, std::size_t v) {
    char buf[24];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    line.append(buf, end);
}

void put_quoted(std::string& line, std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
        line += s;
        return;
    }
    line += '"';
    for (char c : s) {
        if (c == '"') line += '"';
        line += c;
    }
    line += '"';
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    if (quoted) throw std::runtime_error("history csv line " + std::to_string(line_no) + ": unterminated quote");
    return fields;
}

[[noreturn]] void bad_field(std::size_t line_no, std::string_view column, std::string_view value) {
    throw std::runtime_error("history csv line " + std::to_string(line_no) + ": bad " + std::string(column) +
                             " value '" + std::string(value) + "'");
}

double parse_real(const std::string& s, std::size_t line_no, std::string_view column) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) bad_field(line_no, column, s);
    return v;
}

std::size_t parse_uint(const std::string& s, std::size_t line_no, std::string_view column) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) bad_field(line_no, column, s);
    return v;
}

}  // namespace

// ---------------------------------------------------------------- RunLog

void RunLog::reserve(std::size_t n) {
    t_.reserve(n);
    choice_.reserve(n);
    reward_.reserve(n);
    optimal_reward_.reserve(n);
    optimal_arm_.reserve(n);
    propensity_.reserve(n);
}

void RunLog::append(std::size_t t, ArmIndex choice, double reward, std::optional<double> optimal_reward,
                    std::optional<ArmIndex> optimal_arm, std::optional<double> propensity,
                    std::span<const double> context, std::string theta_json) {
    if (!t_.empty() && t <= t_.back()) throw ContractError("run log: t must be strictly increasing");
    if (!context.empty()) {
        if (context_dim_ == 0 && t_.empty()) context_dim_ = context.size();
        if (context.size() != context_dim_) throw ContractError("run log: context dimension changed");
        context_.insert(context_.end(), context.begin(), context.end());
    } else if (context_dim_ != 0) {
        throw ContractError("run log: missing context");
    }
    if (!theta_json.empty() || !theta_.empty()) {
        if (theta_.size() != t_.size()) throw ContractError("run log: theta saved for only some steps");
        theta_.push_back(std::move(theta_json));
    }
    t_.push_back(static_cast<std::uint32_t>(t));
    choice_.push_back(static_cast<std::uint32_t>(choice));
    reward_.push_back(reward);
    optimal_reward_.push_back(optimal_reward.value_or(kNaN));
    if (!optimal_reward) ++missing_optimal_;
    optimal_arm_.push_back(optimal_arm ? static_cast<std::int32_t>(*optimal_arm) : -1);
    propensity_.push_back(propensity.value_or(kNaN));
}

void RunLog::truncate(std::size_t n) {
    if (n >= size()) return;
    for (std::size_t i = n; i < size(); ++i)
        if (std::isnan(optimal_reward_[i])) --missing_optimal_;
    t_.resize(n);
    choice_.resize(n);
    reward_.resize(n);
    optimal_reward_.resize(n);
    optimal_arm_.resize(n);
    propensity_.resize(n);
    context_.resize(n * context_dim_);
    if (!theta_.empty()) theta_.resize(n);
}

std::optional<double> RunLog::optimal_reward(std::size_t i) const {
    return std::isnan(optimal_reward_[i]) ? std::nullopt : std::optional<double>(optimal_reward_[i]);
}

std::optional<ArmIndex> RunLog::optimal_arm(std::size_t i) const {
    return optimal_arm_[i] < 0 ? std::nullopt : std::optional<ArmIndex>(static_cast<ArmIndex>(optimal_arm_[i]));
}

std::optional<double> RunLog::propensity(std::size_t i) const {
    return std::isnan(propensity_[i]) ? std::nullopt : std::optional<double>(propensity_[i]);
}

std::span<const double> RunLog::context(std::size_t i) const {
    if (context_dim_ == 0) return {};
    return {context_.data() + i * context_dim_, context_dim_};
}

// ---------------------------------------------------------------- HistoryLog

void HistoryLog::add_run(std::string_view agent, std::size_t arms, RunLog run) {
    auto it = std::find_if(agents_.begin(), agents_.end(), [&](const AgentRuns& a) { return a.name == agent; });
    if (it == agents_.end()) {
        agents_.push_back({std::string(agent), arms, {}});
        it = std::prev(agents_.end());
    }
    it->arms = std::max(it->arms, arms);
    it->runs.push_back(std::move(run));
}

const HistoryLog::AgentRuns* HistoryLog::find(std::string_view agent) const {
    for (const auto& a : agents_)
        if (a.name == agent) return &a;
    return nullptr;
}

std::size_t HistoryLog::record_count() const {
    std::size_t n = 0;
    for (const auto& a : agents_)
        for (const auto& r : a.runs) n += r.size();
    return n;
}

void HistoryLog::canonical_sort() {
    std::sort(agents_.begin(), agents_.end(), [](const AgentRuns& a, const AgentRuns& b) { return a.name < b.name; });
    for (auto& a : agents_) {
        std::stable_sort(a.runs.begin(), a.runs.end(),
                         [](const RunLog& x, const RunLog& y) { return x.sim() < y.sim(); });
    }
}

void HistoryLog::reindex() {
    for (auto& a : agents_) {
        if (a.runs.empty()) continue;
        std::size_t shortest = a.runs.front().size();
        for (const auto& r : a.runs) shortest = std::min(shortest, r.size());
        for (auto& r : a.runs) r.truncate(shortest);
    }
}

std::vector<StepRecord> HistoryLog::records() const {
    std::vector<StepRecord> out;
    out.reserve(record_count());
    for (const auto& a : agents_) {
        for (const auto& r : a.runs) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                auto ctx = r.context(i);
                out.push_back({a.name, r.sim(), r.t(i), r.choice(i), r.reward(i), r.optimal_reward(i),
                               r.optimal_arm(i), r.propensity(i), std::vector<double>(ctx.begin(), ctx.end()),
                               r.has_theta() ? r.theta(i) : std::string{}});
            }
        }
    }
    return out;
}

void HistoryLog::write_csv(std::ostream& out) const {
    std::size_t context_dim = 0;
    bool theta = false;
    for (const auto& a : agents_) {
        for (const auto& r : a.runs) {
            context_dim = std::max(context_dim, r.context_dim());
            theta = theta || r.has_theta();
        }
    }
    std::string line = "agent,sim,t,choice,reward,optimal_reward,optimal_arm,propensity";
    for (std::size_t j = 1; j <= context_dim; ++j) line += ",context_" + std::to_string(j);
    if (theta) line += ",theta_json";
    line += '\n';
    out << line;

    for (const auto& a : agents_) {
        for (const auto& r : a.runs) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                line.clear();
                put_quoted(line, a.name);
                line += ',';
                put_uint(line, r.sim());
                line += ',';
                put_uint(line, r.t(i));
                line += ',';
                put_uint(line, r.choice(i) + 1);
                line += ',';
                put_real(line, r.reward(i));
                line += ',';
                if (auto v = r.optimal_reward(i)) put_real(line, *v);
                line += ',';
                if (auto v = r.optimal_arm(i)) put_uint(line, *v + 1);
                line += ',';
                if (auto v = r.propensity(i)) put_real(line, *v);
                auto ctx = r.context(i);
                for (std::size_t j = 0; j < context_dim; ++j) {
                    line += ',';
                    if (j < ctx.size()) put_real(line, ctx[j]);
                }
                if (theta) {
                    line += ',';
                    if (r.has_theta()) put_quoted(line, r.theta(i));
                }
                line += '\n';
                out << line;
            }
        }
    }
}

std::string HistoryLog::to_csv() const {
    std::ostringstream s;
    write_csv(s);
    return s.str();
}

HistoryLog HistoryLog::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("history csv: empty input");
    const auto header = split_csv_line(line, 1);
    static const char* kFixed[] = {"agent", "sim", "t", "choice", "reward", "optimal_reward", "optimal_arm",
                                   "propensity"};
    if (header.size() < 8) throw std::runtime_error("history csv: header too short");
    for (std::size_t i = 0; i < 8; ++i)
        if (header[i] != kFixed[i]) throw std::runtime_error("history csv: unexpected column '" + header[i] + "'");
    std::size_t context_dim = 0;
    bool theta = false;
    for (std::size_t i = 8; i < header.size(); ++i) {
        if (header[i] == "context_" + std::to_string(context_dim + 1) && !theta) {
            ++context_dim;
        } else if (header[i] == "theta_json" && i + 1 == header.size()) {
            theta = true;
        } else {
            throw std::runtime_error("history csv: unexpected column '" + header[i] + "'");
        }
    }

    // Runs are keyed by (agent, sim) in order of first appearance.
    struct Pending {
        std::string agent;
        std::size_t arms = 0;
        RunLog run;
    };
    std::vector<Pending> pending;
    std::map<std::pair<std::string, std::size_t>, std::size_t> index;
    std::vector<double> ctx(context_dim);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line, line_no);
        if (f.size() != header.size()) {
            throw std::runtime_error("history csv line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        }
        const std::size_t sim = parse_uint(f[1], line_no, "sim");
        const std::size_t t = parse_uint(f[2], line_no, "t");
        const std::size_t choice = parse_uint(f[3], line_no, "choice");
        if (choice == 0 || sim == 0 || t == 0) bad_field(line_no, "index", "0");
        const double reward = parse_real(f[4], line_no, "reward");
        std::optional<double> opt_reward, propensity;
        std::optional<ArmIndex> opt_arm;
        if (!f[5].empty()) opt_reward = parse_real(f[5], line_no, "optimal_reward");
        if (!f[6].empty()) {
            const std::size_t a = parse_uint(f[6], line_no, "optimal_arm");
            if (a == 0) bad_field(line_no, "optimal_arm", f[6]);
            opt_arm = a - 1;
        }
        if (!f[7].empty()) propensity = parse_real(f[7], line_no, "propensity");
        bool has_ctx = false;
        for (std::size_t j = 0; j < context_dim; ++j) {
            if (!f[8 + j].empty()) {
                ctx[j] = parse_real(f[8 + j], line_no, "context");
                has_ctx = true;
            }
        }
        auto key = std::make_pair(f[0], sim);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, pending.size()).first;
            pending.push_back({f[0], 0, RunLog(sim)});
        }
        Pending& p = pending[it->second];
        p.arms = std::max({p.arms, choice, opt_arm ? *opt_arm + 1 : 0});
        try {
            p.run.append(t, choice - 1, reward, opt_reward, opt_arm, propensity,
                         has_ctx ? std::span<const double>(ctx) : std::span<const double>{},
                         theta ? f.back() : std::string{});
        } catch (const ContractError& e) {
            throw std::runtime_error("history csv line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    HistoryLog log;
    for (auto& p : pending) log.add_run(p.agent, p.arms, std::move(p.run));
    return log;
}

}  // namespace cbsim
