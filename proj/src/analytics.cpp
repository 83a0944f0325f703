#include "cbsim/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "cbsim/kernels.hpp"

namespace cbsim {

namespace {

constexpr double kZ95 = 1.96;

/// Streams per-sim series of length T into Welford accumulators.
class MomentAccumulator {
public:
    explicit MomentAccumulator(std::size_t horizon) : mean_(horizon, 0.0), m2_(horizon, 0.0) {}

    void add(std::span<const double> series) {
        ++count_;
        kernels::welford(series, mean_, m2_, static_cast<double>(count_));
    }

    Moments finish() const {
        Moments m;
        const std::size_t T = mean_.size();
        const double n = static_cast<double>(count_);
        m.mean = mean_;
        m.var.resize(T);
        m.sd.resize(T);
        m.se.resize(T);
        m.ci.resize(T);
        for (std::size_t i = 0; i < T; ++i) {
            m.var[i] = count_ > 1 ? std::max(0.0, m2_[i] / (n - 1.0)) : 0.0;
            m.sd[i] = std::sqrt(m.var[i]);
            m.se[i] = m.sd[i] / std::sqrt(n);
            m.ci[i] = kZ95 * m.se[i];
        }
        return m;
    }

private:
    std::size_t count_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Moments of x_t / t given the moments of x_t.
Moments per_t_rate(const Moments& m) {
    Moments r = m;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double t = static_cast<double>(i + 1);
        r.mean[i] = m.mean[i] / t;
        r.var[i] = m.var[i] / (t * t);
        r.sd[i] = m.sd[i] / t;
        r.se[i] = m.se[i] / t;
        r.ci[i] = m.ci[i] / t;
    }
    return r;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.7g", v);
    return buf;
}

/// Right-aligned columns separated by one space, with one leading space.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::string out;
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            out += ' ';
            out.append(width[c] - r[c].size(), ' ');
            out += r[c];
        }
        out += '\n';
    }
    return out;
}

}  // namespace

std::optional<double> per_step_regret(const StepRecord& record) {
    if (!record.optimal_reward) return std::nullopt;
    return *record.optimal_reward - record.reward;
}

std::vector<AggregateSeries> aggregate(const HistoryLog& history) {
    if (history.empty()) throw ContractError("cannot aggregate an empty history");
    std::vector<AggregateSeries> out;
    for (const auto& agent : history.agents()) {
        if (agent.runs.empty()) continue;
        const std::size_t T = agent.runs.front().size();
        for (const auto& run : agent.runs) {
            if (run.size() != T) {
                throw ContractError("agent '" + agent.name +
                                    "' has runs of different lengths; rerun with reindex enabled");
            }
        }
        if (T == 0) continue;
        bool regret = true;
        for (const auto& run : agent.runs) regret = regret && run.regret_available();

        AggregateSeries s;
        s.agent = agent.name;
        s.sims = agent.runs.size();
        s.horizon = T;
        s.arms = agent.arms;
        s.arm_share.assign(T * s.arms, 0.0);

        MomentAccumulator reward(T), cum_reward(T), step_regret(T), cum_regret(T);
        std::vector<double> optimal_sum(T, 0.0);
        std::vector<double> buf(T), cum(T), reg(T), cum_reg(T);
        for (const auto& run : agent.runs) {
            double acc = 0.0, racc = 0.0;
            for (std::size_t i = 0; i < T; ++i) {
                buf[i] = run.reward(i);
                acc += buf[i];
                cum[i] = acc;
                s.arm_share[i * s.arms + run.choice(i)] += 1.0;
                if (regret) {
                    const double opt = *run.optimal_reward(i);
                    optimal_sum[i] += opt;
                    reg[i] = opt - buf[i];
                    racc += reg[i];
                    cum_reg[i] = racc;
                }
            }
            reward.add(buf);
            cum_reward.add(cum);
            if (regret) {
                step_regret.add(reg);
                cum_regret.add(cum_reg);
            }
        }
        const double n = static_cast<double>(s.sims);
        for (double& v : s.arm_share) v /= n;
        s.reward = reward.finish();
        s.cum_reward = cum_reward.finish();
        s.cum_reward_rate = per_t_rate(s.cum_reward);
        if (regret) {
            s.regret = step_regret.finish();
            s.cum_regret = cum_regret.finish();
            s.cum_regret_rate = per_t_rate(*s.cum_regret);
            for (double& v : optimal_sum) v /= n;
            s.optimal_mean = std::move(optimal_sum);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string summarize(const HistoryLog& history) { return summarize(aggregate(history)); }

std::string summarize(const std::vector<AggregateSeries>& series) {
    std::vector<const AggregateSeries*> sorted;
    for (const auto& s : series) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->agent < b->agent; });

    std::string out = "Agents:\n\n";
    for (auto* s : sorted) out += "  " + s->agent + "\n";

    auto block = [&](const std::string& title, const std::string& prefix, auto pick) {
        out += "\n" + title + ":\n\n";
        std::vector<std::vector<std::string>> rows{
            {"agent", "t", "sims", prefix, prefix + "_var", prefix + "_sd"}};
        for (auto* s : sorted) {
            const Moments* m = pick(*s);
            const std::size_t last = s->horizon - 1;
            if (m == nullptr) {
                rows.push_back({s->agent, std::to_string(s->horizon), std::to_string(s->sims), "n/a", "n/a", "n/a"});
            } else {
                rows.push_back({s->agent, std::to_string(s->horizon), std::to_string(s->sims), fmt(m->mean[last]),
                                fmt(m->var[last]), fmt(m->sd[last])});
            }
        }
        out += render_table(rows);
    };

    const bool any_regret = std::any_of(sorted.begin(), sorted.end(), [](auto* s) { return s->cum_regret.has_value(); });
    if (any_regret) {
        block("Cumulative regret", "cum_regret",
              [](const AggregateSeries& s) { return s.cum_regret ? &*s.cum_regret : nullptr; });
    } else {
        out += "\nCumulative regret:\n\n n/a\n";
    }
    block("Cumulative reward", "cum_reward", [](const AggregateSeries& s) { return &s.cum_reward; });
    block("Cumulative reward rate", "cur_reward", [](const AggregateSeries& s) { return &s.cum_reward_rate; });
    return out;
}

// ---------------------------------------------------------------- plots

PlotKind parse_plot_kind(std::string_view s) {
    if (s == "average") return PlotKind::average;
    if (s == "cumulative") return PlotKind::cumulative;
    if (s == "arms") return PlotKind::arms;
    throw std::invalid_argument("unknown plot kind '" + std::string(s) + "' (average, cumulative, arms)");
}

Dispersion parse_dispersion(std::string_view s) {
    if (s == "none") return Dispersion::none;
    if (s == "sd") return Dispersion::sd;
    if (s == "var") return Dispersion::var;
    if (s == "ci") return Dispersion::ci;
    throw std::invalid_argument("unknown dispersion '" + std::string(s) + "' (none, sd, var, ci)");
}

std::string_view plot_kind_name(PlotKind kind) noexcept {
    switch (kind) {
        case PlotKind::average: return "average";
        case PlotKind::cumulative: return "cumulative";
        case PlotKind::arms: return "arms";
    }
    return "?";
}

namespace {

struct Line {
    std::string series;
    std::vector<double> value;
    std::vector<double> spread;  // empty when there is no dispersion band
    std::vector<std::size_t> t;  // empty means t = 1..size
};

std::vector<double> moving_average(const std::vector<double>& v, std::size_t width) {
    if (width <= 1 || v.empty()) return v;
    const std::size_t half = width / 2;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(v.size() - 1, i + (width - 1 - half));
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) s += v[j];
        out[i] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

const std::vector<double>* spread_of(const Moments& m, Dispersion d) {
    switch (d) {
        case Dispersion::sd: return &m.sd;
        case Dispersion::var: return &m.var;
        case Dispersion::ci: return &m.ci;
        case Dispersion::none: return nullptr;
    }
    return nullptr;
}

Line moment_line(std::string name, const Moments& m, Dispersion d) {
    Line l{std::move(name), m.mean, {}, {}};
    if (auto* s = spread_of(m, d)) l.spread = *s;
    return l;
}

/// Arm shares in percent over the steps where feature `feature` (0-based) was active.
std::vector<Line> conditional_arm_lines(const HistoryLog::AgentRuns& agent, std::size_t feature) {
    std::size_t T = 0;
    for (const auto& run : agent.runs) {
        if (run.size() > 0 && run.context_dim() == 0) {
            throw ContractError("limit_context needs a history saved with contexts");
        }
        if (run.context_dim() > 0 && feature >= run.context_dim()) {
            throw ContractError("limit_context feature " + std::to_string(feature + 1) + " exceeds context dimension " +
                                std::to_string(run.context_dim()));
        }
        T = std::max(T, run.size());
    }
    std::vector<double> counts(T * agent.arms, 0.0);
    std::vector<double> totals(T, 0.0);
    for (const auto& run : agent.runs) {
        for (std::size_t i = 0; i < run.size(); ++i) {
            if (run.context(i)[feature] == 0.0) continue;
            counts[i * agent.arms + run.choice(i)] += 1.0;
            totals[i] += 1.0;
        }
    }
    std::vector<Line> lines(agent.arms);
    for (std::size_t a = 0; a < agent.arms; ++a) lines[a].series = "arm_" + std::to_string(a + 1);
    for (std::size_t i = 0; i < T; ++i) {
        if (totals[i] == 0.0) continue;
        for (std::size_t a = 0; a < agent.arms; ++a) {
            lines[a].t.push_back(i + 1);
            lines[a].value.push_back(100.0 * counts[i * agent.arms + a] / totals[i]);
        }
    }
    return lines;
}

}  // namespace

std::vector<PlotRow> emit_plot_series(const HistoryLog& history, const PlotOptions& options) {
    if (options.interval == 0) throw std::invalid_argument("interval must be at least 1");
    if (options.limit_context && *options.limit_context == 0) {
        throw std::invalid_argument("limit_context features are numbered from 1");
    }
    if (options.limit_context && options.kind != PlotKind::arms) {
        throw std::invalid_argument("limit_context applies to arms plots only");
    }
    auto wanted = [&](const std::string& name) {
        return options.limit_agents.empty() ||
               std::find(options.limit_agents.begin(), options.limit_agents.end(), name) != options.limit_agents.end();
    };

    std::vector<PlotRow> rows;
    auto emit = [&](const std::string& agent, const Line& raw) {
        Line l = raw;
        if (options.smooth) {
            l.value = moving_average(l.value, options.interval);
            if (!l.spread.empty()) l.spread = moving_average(l.spread, options.interval);
        }
        const std::size_t n = l.value.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (i % options.interval != 0 && i + 1 != n) continue;
            PlotRow r{agent, l.t.empty() ? i + 1 : l.t[i], l.series, l.value[i], std::nullopt, std::nullopt};
            if (!l.spread.empty()) {
                r.lower = l.value[i] - l.spread[i];
                r.upper = l.value[i] + l.spread[i];
            }
            rows.push_back(std::move(r));
        }
    };

    if (options.kind == PlotKind::arms && options.limit_context) {
        for (const auto& agent : history.agents()) {
            if (!wanted(agent.name)) continue;
            for (const auto& l : conditional_arm_lines(agent, *options.limit_context - 1)) emit(agent.name, l);
        }
        return rows;
    }

    for (const auto& s : aggregate(history)) {
        if (!wanted(s.agent)) continue;
        switch (options.kind) {
            case PlotKind::arms:
                for (std::size_t a = 0; a < s.arms; ++a) {
                    Line l{"arm_" + std::to_string(a + 1), std::vector<double>(s.horizon), {}, {}};
                    for (std::size_t t = 1; t <= s.horizon; ++t) l.value[t - 1] = 100.0 * s.share(t, a);
                    emit(s.agent, l);
                }
                break;
            case PlotKind::average:
                if (options.regret) {
                    if (!s.regret) throw ContractError("agent '" + s.agent + "' has no optimal rewards for regret");
                    emit(s.agent, moment_line("regret", *s.regret, options.dispersion));
                } else {
                    emit(s.agent, moment_line("reward", s.reward, options.dispersion));
                }
                break;
            case PlotKind::cumulative:
                if (options.regret) {
                    if (!s.cum_regret) throw ContractError("agent '" + s.agent + "' has no optimal rewards for regret");
                    emit(s.agent, options.rate ? moment_line("cum_regret_rate", *s.cum_regret_rate, options.dispersion)
                                               : moment_line("cum_regret", *s.cum_regret, options.dispersion));
                } else {
                    emit(s.agent, options.rate ? moment_line("cum_reward_rate", s.cum_reward_rate, options.dispersion)
                                               : moment_line("cum_reward", s.cum_reward, options.dispersion));
                }
                break;
        }
    }
    return rows;
}

void write_plot_csv(std::ostream& out, const std::vector<PlotRow>& rows) {
    out << "agent,t,series,value,lower,upper\n";
    char buf[40];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        std::string agent = r.agent;
        if (agent.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char c : agent) {
                if (c == '"') q += '"';
                q += c;
            }
            agent = q + '"';
        }
        out << agent << ',' << r.t << ',' << r.series << ',' << num(r.value) << ','
            << (r.lower ? num(*r.lower) : "") << ',' << (r.upper ? num(*r.upper) : "") << '\n';
    }
}

void write_plot_svg(std::ostream& out, const std::vector<PlotRow>& rows, const std::string& title) {
    constexpr double W = 800, H = 500, L = 70, R = 200, Tm = 40, B = 50;
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    std::map<std::pair<std::string, std::string>, std::vector<const PlotRow*>> lines;
    std::vector<std::pair<std::string, std::string>> order;
    double tmin = 1e300, tmax = -1e300, vmin = 1e300, vmax = -1e300;
    for (const auto& r : rows) {
        auto key = std::make_pair(r.agent, r.series);
        if (!lines.count(key)) order.push_back(key);
        lines[key].push_back(&r);
        tmin = std::min(tmin, static_cast<double>(r.t));
        tmax = std::max(tmax, static_cast<double>(r.t));
        vmin = std::min({vmin, r.value, r.lower.value_or(r.value)});
        vmax = std::max({vmax, r.value, r.upper.value_or(r.value)});
    }
    if (rows.empty()) tmin = 0, tmax = 1, vmin = 0, vmax = 1;
    if (tmax == tmin) tmax = tmin + 1;
    if (vmax == vmin) vmax = vmin + 1;
    auto x = [&](double t) { return L + (t - tmin) / (tmax - tmin) * (W - L - R); };
    auto y = [&](double v) { return H - B - (v - vmin) / (vmax - vmin) * (H - Tm - B); };
    auto esc = [](const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else if (c == '&') o += "&amp;";
            else o += c;
        }
        return o;
    };

    char buf[64];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(title) << "</text>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = vmin + (vmax - vmin) * i / 4.0;
        const double t = tmin + (tmax - tmin) * i / 4.0;
        std::snprintf(buf, sizeof buf, "%.4g", v);
        out << "<text x=\"" << L - 6 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
        std::snprintf(buf, sizeof buf, "%.0f", t);
        out << "<text x=\"" << x(t) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << buf << "</text>\n";
    }
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">t</text>\n";
    std::size_t idx = 0;
    for (const auto& key : order) {
        const char* color = kColors[idx % std::size(kColors)];
        const auto& pts = lines[key];
        if (pts.front()->lower) {
            out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
            for (auto* p : pts) out << x(static_cast<double>(p->t)) << ',' << y(*p->upper) << ' ';
            for (auto it = pts.rbegin(); it != pts.rend(); ++it)
                out << x(static_cast<double>((*it)->t)) << ',' << y(*(*it)->lower) << ' ';
            out << "\"/>\n";
        }
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (auto* p : pts) out << x(static_cast<double>(p->t)) << ',' << y(p->value) << ' ';
        out << "\"/>\n";
        const double ly = Tm + 16.0 * static_cast<double>(idx);
        out << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << W - R + 36 << "\" y=\"" << ly + 4 << "\">" << esc(key.first + " " + key.second)
            << "</text>\n";
        ++idx;
    }
    out << "</svg>\n";
}

}  // namespace cbsim
