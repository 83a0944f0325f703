// cbsim: run bandit experiments, summarise and plot history logs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cbsim/analytics.hpp"
#include "cbsim/experiment.hpp"
#include "cbsim/offline.hpp"

namespace {

std::optional<std::size_t> workers_from_env() {
    const char* v = std::getenv("CBSIM_WORKERS");
    if (v == nullptr || *v == '\0') return std::nullopt;
    try {
        const long long n = std::stoll(v);
        if (n >= 1) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring CBSIM_WORKERS='" << v << "' (expected a positive integer)\n";
    return std::nullopt;
}

cbsim::HistoryLog read_history(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return cbsim::HistoryLog::read_csv(in);
}

/// Writes log lines to stderr and, when given, to a file as well.
class TeeBuf : public std::streambuf {
public:
    TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

protected:
    int overflow(int c) override {
        if (c == EOF) return !EOF;
        const bool ok = a_->sputc(static_cast<char>(c)) != EOF && (b_ == nullptr || b_->sputc(static_cast<char>(c)) != EOF);
        return ok ? c : EOF;
    }
    int sync() override {
        const int r = a_->pubsync();
        return (b_ != nullptr && b_->pubsync() != 0) ? -1 : r;
    }

private:
    std::streambuf* a_;
    std::streambuf* b_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contextual bandit simulation and offline evaluation"};
    app.require_subcommand(1);

    std::string config_path, log_file;
    std::optional<std::size_t> workers;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
    run->add_option("config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
    run->add_option("-w,--workers", workers, "Worker threads (default: $CBSIM_WORKERS, else cores - 1)")
        ->check(CLI::PositiveNumber);
    run->add_option("--log-file", log_file, "Also write progress events to this file");
    run->add_flag("-q,--quiet", quiet, "Do not print progress events");

    app.add_subcommand("list", "List bandits and policies with their parameters");

    std::string history_path;
    auto* summ = app.add_subcommand("summarize", "Print the summary table of a history CSV");
    summ->add_option("history", history_path, "History CSV")->required()->check(CLI::ExistingFile);

    cbsim::PlotOptions plot_opts;
    std::string kind = "cumulative", dispersion = "none", table_out, svg_out;
    bool no_regret = false;
    std::size_t context_feature = 0;
    auto* plot = app.add_subcommand("plot", "Write a tidy plot table (and optionally an SVG) from a history CSV");
    plot->add_option("history", history_path, "History CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--kind", kind, "average, cumulative or arms")
        ->check(CLI::IsMember({"average", "cumulative", "arms"}));
    plot->add_flag("--reward", no_regret, "Plot rewards instead of regret");
    plot->add_flag("--rate", plot_opts.rate, "Divide cumulative series by t");
    plot->add_option("--dispersion", dispersion, "none, sd, var or ci")->check(CLI::IsMember({"none", "sd", "var", "ci"}));
    plot->add_option("--interval", plot_opts.interval, "Keep every n-th t")->check(CLI::PositiveNumber);
    plot->add_flag("--smooth", plot_opts.smooth, "Centred moving average of width --interval");
    plot->add_option("--agent", plot_opts.limit_agents, "Only these agents");
    plot->add_option("--context", context_feature, "Arms plot limited to steps where this feature was active")
        ->check(CLI::PositiveNumber);
    plot->add_option("-o,--out", table_out, "Table CSV (default stdout)");
    plot->add_option("--svg", svg_out, "Also render an SVG chart");

    std::size_t log_rows = 10000;
    std::string log_out, propensity = "none";
    std::uint64_t log_seed = 1;
    auto* mklog = app.add_subcommand(
        "make-log", "Log the first agent of a config acting online on its bandit, in the offline log format");
    mklog->add_option("config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
    mklog->add_option("-n,--rows", log_rows, "Events to log")->check(CLI::PositiveNumber);
    mklog->add_option("--seed", log_seed, "Seed");
    mklog->add_option("--propensity", propensity, "none, reported or exact")
        ->check(CLI::IsMember({"none", "reported", "exact"}));
    mklog->add_option("-o,--out", log_out, "Output file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (!workers) workers = workers_from_env();
            const auto cfg = cbsim::parse_config(config_path, workers);
            std::ofstream file;
            if (!log_file.empty()) {
                file.open(log_file);
                if (!file) throw std::runtime_error("cannot open log file " + log_file);
            }
            std::ofstream null_stream;
            TeeBuf tee(quiet ? null_stream.rdbuf() : std::cerr.rdbuf(), file.is_open() ? file.rdbuf() : nullptr);
            std::ostream log(&tee);
            return cbsim::run_experiment(cfg, std::cout, log);
        }
        if (app.got_subcommand("list")) {
            std::cout << cbsim::list_registry();
            return 0;
        }
        if (*summ) {
            std::cout << cbsim::summarize(read_history(history_path));
            return 0;
        }
        if (*plot) {
            plot_opts.kind = cbsim::parse_plot_kind(kind);
            plot_opts.dispersion = cbsim::parse_dispersion(dispersion);
            plot_opts.regret = !no_regret;
            if (context_feature > 0) plot_opts.limit_context = context_feature;
            const auto rows = cbsim::emit_plot_series(read_history(history_path), plot_opts);
            if (table_out.empty()) {
                cbsim::write_plot_csv(std::cout, rows);
            } else {
                std::ofstream out(table_out);
                if (!out) throw std::runtime_error("cannot write " + table_out);
                cbsim::write_plot_csv(out, rows);
            }
            if (!svg_out.empty()) {
                std::ofstream out(svg_out);
                if (!out) throw std::runtime_error("cannot write " + svg_out);
                cbsim::write_plot_svg(out, rows, kind);
            }
            return 0;
        }
        if (*mklog) {
            const auto cfg = cbsim::parse_config(config_path);
            const auto bandit = cbsim::make_bandit(cfg.bandit, cfg.base_dir);
            const auto policy = cbsim::make_policy(cfg.agents.front(), log_rows);
            std::optional<cbsim::PropensitySource> source;
            if (propensity == "reported") source = cbsim::PropensitySource::reported;
            if (propensity == "exact") source = cbsim::PropensitySource::exact;
            cbsim::write_log(log_out, cbsim::simulate_log(*bandit, *policy, log_rows, log_seed, source));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
