// recur: permutation independence tests, power studies, dependograms and
// scenario simulation from the command line.
//
// Exit status: 0 success, 2 invalid input, 1 internal error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "recur/recur.hpp"

using namespace recur;

namespace {

constexpr int kExitUser = 2;
constexpr int kExitInternal = 1;

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    for (auto field : detail::split_line(text, ',')) {
        if (detail::trim(field).empty()) continue;
        double v = 0.0;
        if (!detail::parse_number(field, v) || !std::isfinite(v)) {
            throw InvalidInput(std::string("bad ") + what + " value '" + std::string(detail::trim(field)) + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<double> parse_levels(const std::string& text) {
    auto levels = parse_list(text, "level");
    if (levels.empty()) throw InvalidInput("--levels must list at least one level");
    for (double a : levels) {
        if (!(a > 0.0 && a < 1.0)) throw InvalidInput("level " + level_key(a) + " is outside (0, 1)");
    }
    return levels;
}

void emit(const std::optional<std::string>& path, const std::string& text) {
    if (path) {
        detail::write_file(*path, text);
    } else {
        std::fwrite(text.data(), 1, text.size(), stdout);
        std::fflush(stdout);
    }
}

struct TestArgs {
    std::string x, y;
    std::string functional = "l2";
    std::string metric_x = "l2", metric_y = "l2";
    std::size_t perms = 199;
    std::uint64_t seed = 0;
    std::optional<std::string> out;
    std::string levels = "0.05,0.1";
    bool timing = false;
};

void run_test(const TestArgs& a, unsigned threads) {
    if (a.perms < 1) throw InvalidInput("--perms must be at least 1");
    const auto levels = parse_levels(a.levels);
    const StatisticSpec spec{parse_functional(a.functional), parse_metric(a.metric_x), parse_metric(a.metric_y)};
    const auto x = read_dataset(a.x);
    const auto y = read_dataset(a.y);
    const auto report = permutation_test(x.sample, y.sample, spec, a.perms, a.seed, threads);
    emit(a.out, format_report(make_report(report, levels, a.timing)));
}

struct PowerArgs {
    std::string config;
    std::optional<std::string> out;
    bool timing = false;
};

void run_power_cmd(const PowerArgs& a, unsigned threads) {
    auto studies = parse_power_config(detail::read_file(a.config));
    std::string csv = std::string(kPowerCsvHeader) + "\n";
    for (auto& s : studies) {
        if (threads > 0) s.threads = threads;
        csv += format_power_rows(run_power(s), a.timing);
    }
    emit(a.out, csv);
}

struct DependogramArgs {
    std::string data, groups;
    std::string functional = "l2";
    std::string metric = "l2";
    std::size_t perms = 199;
    std::string levels = "0.05,0.1";
    std::uint64_t seed = 0;
    std::optional<std::string> out;
};

void run_dependogram(const DependogramArgs& a, unsigned threads) {
    if (a.perms < 1) throw InvalidInput("--perms must be at least 1");
    const auto levels = parse_levels(a.levels);
    const auto metric = parse_metric(a.metric);
    const StatisticSpec spec{parse_functional(a.functional), metric, metric};
    const auto ds = read_dataset(a.data);
    const auto groups = parse_groups(a.groups, ds.sample.d());
    std::vector<Sample> samples;
    std::vector<std::string> labels;
    for (const auto& g : groups) {
        samples.push_back(ds.sample.columns(g.first, g.last + 1));
        labels.push_back(g.name);
    }
    emit(a.out, format_dependogram(dependogram(samples, labels, spec, a.perms, a.seed, levels, threads)));
}

struct SimulateArgs {
    std::string scenario;
    std::size_t n = 30;
    std::size_t len = 100;
    std::uint64_t seed = 0;
    std::string out_x, out_y;
    std::optional<std::string> phi;
    double theta = 0.0;
    std::optional<double> hurst, lambda, lambda1, lambda2;
    double sigma = 1.0;
};

void run_simulate(const SimulateArgs& a) {
    ScenarioConfig cfg;
    cfg.id = parse_scenario(a.scenario);
    cfg.n = a.n;
    cfg.len = a.len;
    cfg.seed = a.seed;
    if (a.phi) cfg.phi = parse_list(*a.phi, "phi");
    cfg.theta = a.theta;
    cfg.hurst = a.hurst;
    cfg.lambda = a.lambda;
    cfg.lambda1 = a.lambda1;
    cfg.lambda2 = a.lambda2;
    cfg.sigma = a.sigma;
    const auto [x, y] = gen_scenario(cfg);
    write_dataset(a.out_x, x);
    write_dataset(a.out_y, y);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrence-rate independence tests for paired samples in metric spaces"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0: RECUR_THREADS or all cores)");

    TestArgs ta;
    auto* test = app.add_subcommand("test", "Permutation test of independence between two datasets");
    test->add_option("--x", ta.x, "CSV file, one observation per row")->required();
    test->add_option("--y", ta.y, "CSV file with the same number of rows")->required();
    test->add_option("--functional", ta.functional, "l1, l2 or sup")->capture_default_str();
    test->add_option("--metric-x", ta.metric_x, "l1, l2 or linf")->capture_default_str();
    test->add_option("--metric-y", ta.metric_y, "l1, l2 or linf")->capture_default_str();
    test->add_option("--perms", ta.perms, "Number of permutations")->capture_default_str();
    test->add_option("--seed", ta.seed, "Permutation seed")->capture_default_str();
    test->add_option("--out", ta.out, "Report path (default stdout)");
    test->add_option("--levels", ta.levels, "Comma-separated levels for the decisions")->capture_default_str();
    test->add_flag("--timing", ta.timing, "Record elapsed_ms (otherwise 0 for byte-stable output)");

    PowerArgs pa;
    auto* power = app.add_subcommand("power", "Monte-Carlo power study from a JSON config");
    power->add_option("--config", pa.config, "Config file")->required();
    power->add_option("--out", pa.out, "CSV path (default stdout)");
    power->add_flag("--timing", pa.timing, "Fill the seconds column");

    DependogramArgs da;
    auto* dep = app.add_subcommand("dependogram", "Pairwise tests between column groups of one dataset");
    dep->add_option("--data", da.data, "CSV file")->required();
    dep->add_option("--groups", da.groups, "Groups as name=first:last;... (0-based, inclusive)")->required();
    dep->add_option("--functional", da.functional, "l1, l2 or sup")->capture_default_str();
    dep->add_option("--metric", da.metric, "l1, l2 or linf, used for every group")->capture_default_str();
    dep->add_option("--perms", da.perms, "Permutations per pair")->capture_default_str();
    dep->add_option("--levels", da.levels, "Comma-separated levels")->capture_default_str();
    dep->add_option("--seed", da.seed, "Seed")->capture_default_str();
    dep->add_option("--out", da.out, "CSV path (default stdout)");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Write one simulated paired sample as two CSV files");
    sim->add_option("--scenario", sa.scenario, "null, D1-D3, C1-C7, X-OU-Y-OU or X-FOU-Y-FOU")->required();
    sim->add_option("--n", sa.n, "Rows")->capture_default_str();
    sim->add_option("--len", sa.len, "Series length (columns)")->capture_default_str();
    sim->add_option("--seed", sa.seed, "Seed")->capture_default_str();
    sim->add_option("--out-x", sa.out_x, "X output path")->required();
    sim->add_option("--out-y", sa.out_y, "Y output path")->required();
    sim->add_option("--phi", sa.phi, "AR coefficients, comma-separated");
    sim->add_option("--theta", sa.theta, "MA coefficient")->capture_default_str();
    sim->add_option("--hurst", sa.hurst, "Hurst exponent");
    sim->add_option("--lambda", sa.lambda, "Mean-reversion rate");
    sim->add_option("--lambda1", sa.lambda1, "First mean-reversion rate");
    sim->add_option("--lambda2", sa.lambda2, "Second mean-reversion rate");
    sim->add_option("--sigma", sa.sigma, "Scale")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "recur: " << e.what() << "\n";
        return kExitUser;
    }

    try {
        if (*test) run_test(ta, threads);
        else if (*power) run_power_cmd(pa, threads);
        else if (*dep) run_dependogram(da, threads);
        else if (*sim) run_simulate(sa);
    } catch (const InvalidInput& e) {
        std::cerr << "recur: " << e.what() << "\n";
        return kExitUser;
    } catch (const DegenerateWeight& e) {
        std::cerr << "recur: " << e.what() << "\n";
        return kExitUser;
    } catch (const std::exception& e) {
        std::cerr << "recur: internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return 0;
}
