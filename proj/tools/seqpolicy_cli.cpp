// Command-line front end: simulate, fit, evaluate, bandit-run, experiment.
//
// Exit status: 0 on success, 1 when a method or run failed, 2 on bad input
// (unreadable or invalid config, malformed data).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqpolicy/core/csv.hpp"
#include "seqpolicy/dtr_direct/value.hpp"
#include "seqpolicy/harness/config.hpp"
#include "seqpolicy/harness/runner.hpp"
#include "seqpolicy/simulators/mrt.hpp"
#include "seqpolicy/simulators/smart.hpp"

namespace fs = std::filesystem;
using namespace seqpolicy;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string data;
    bool quiet = false;
};

struct BadInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = load_config(c.config);
    if (c.seed) cfg.master_seed = *c.seed;
    if (!c.out.empty()) cfg.output_dir = c.out;
    return cfg;
}

fs::path out_dir(const ExperimentConfig& cfg) { return fs::path(cfg.output_dir); }

void require_scenario(const ExperimentConfig& cfg, const std::string& want, const std::string& verb) {
    if (cfg.scenario != want) throw BadInput(verb + " needs a '" + want + "' config, got '" + cfg.scenario + "'");
}

// Training sample: the --data file when given, else replication 0's draw.
Dataset smart_training_data(const ExperimentConfig& cfg, const Common& c) {
    if (!c.data.empty()) {
        std::ifstream in(c.data);
        if (!in) throw BadInput("cannot open data file '" + c.data + "'");
        return read_dataset_csv(in, cfg.smart.config.schema());
    }
    return simulate_smart(cfg.smart.config, cfg.smart.n, replication_stream(cfg.master_seed, 0).split("train")).data;
}

std::uint64_t restart_seed(const ExperimentConfig& cfg) {
    return replication_stream(cfg.master_seed, 0).split("sowl-restarts").stream();
}

void print_summary(const std::vector<MetricsRecord>& rows) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    std::vector<std::string> order;
    for (const auto& r : rows) {
        std::string key = r.method + "  " + r.metric;
        if (r.step) key += "[" + std::to_string(*r.step) + "]";
        auto [it, fresh] = acc.try_emplace(key, 0.0, 0);
        if (fresh) order.push_back(key);
        it->second.first += r.value;
        ++it->second.second;
    }
    for (const auto& k : order) {
        const auto& [sum, n] = acc[k];
        std::cout << std::left << std::setw(44) << k << std::setprecision(6) << sum / static_cast<double>(n);
        if (n > 1) std::cout << "  (mean of " << n << ")";
        std::cout << '\n';
    }
}

int run_simulate(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const fs::path dir = out_dir(cfg);
    const RngStream rng = replication_stream(cfg.master_seed, 0);
    Dataset data = cfg.scenario == "smart"
                       ? simulate_smart(cfg.smart.config, cfg.smart.n, rng.split("train")).data
                       // Logged trial under uniform randomization.
                       : simulate_mrt(cfg.mrt.config,
                                      [&] { return std::make_unique<PolicyAgent>(PolicySpec::uniform(cfg.mrt.config.arms), "uniform"); },
                                      cfg.mrt.users, rng)
                             .data;
    write_text_file(dir / "dataset.csv", dataset_to_csv(data));
    const nlohmann::json manifest{{"config", cfg.to_json()},
                                  {"config_hash", config_hash(cfg)},
                                  {"master_seed", cfg.master_seed},
                                  {"trajectories", data.size()},
                                  {"outputs", {"dataset.csv"}}};
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
    if (!c.quiet) std::cout << "wrote " << data.size() << " trajectories to " << (dir / "dataset.csv").string() << '\n';
    return 0;
}

int run_fit(const Common& c) {
    const ExperimentConfig cfg = load(c);
    require_scenario(cfg, "smart", "fit");
    const Dataset data = smart_training_data(cfg, c);
    nlohmann::json fits = nlohmann::json::object();
    int status = 0;
    for (const auto& m : cfg.methods) {
        try {
            fits[m.id] = fit_offline_method(cfg.smart.config, m, data, restart_seed(cfg)).model;
            if (!c.quiet) std::cout << "fitted " << m.id << '\n';
        } catch (const std::exception& e) {
            fits[m.id] = {{"status", "failed"}, {"error", e.what()}};
            std::cerr << m.id << ": " << e.what() << '\n';
            status = 1;
        }
    }
    write_text_file(out_dir(cfg) / "fits.json", fits.dump(2) + "\n");
    return status;
}

int run_evaluate(const Common& c) {
    const ExperimentConfig cfg = load(c);
    require_scenario(cfg, "smart", "evaluate");
    const Dataset data = smart_training_data(cfg, c);
    const SmartSample test =
        simulate_smart(cfg.smart.config, cfg.smart.test_size, replication_stream(cfg.master_seed, 0).split("test"));
    std::vector<MetricsRecord> rows;
    {
        const Vector y = trajectory_outcomes(data);
        double mean = 0.0;
        for (double v : y) mean += v / static_cast<double>(y.size());
        rows.push_back({"behavior", 0, "value_estimate", mean, {}});
    }
    int status = 0;
    for (const auto& m : cfg.methods) {
        try {
            const PolicySpec policy = fit_offline_method(cfg.smart.config, m, data, restart_seed(cfg)).policy;
            const double gamma = m.params.count("gamma") ? m.real("gamma") : 1.0;
            rows.push_back({m.id, 0, "value_estimate", estimate_value_iptw(data, policy, gamma).point, {}});
            double both = 0.0;
            for (const auto& tr : test.data.trajectories()) {
                bool ok = true;
                for (std::size_t t = 0; t < 2; ++t)
                    ok = ok && policy.act(t, tr.records[t].state) == test.truth.optimal_arm(t, tr.records[t].state);
                both += ok;
            }
            rows.push_back({m.id, 0, "pct_optimal_action", both / static_cast<double>(test.data.size()), {}});
        } catch (const std::exception& e) {
            std::cerr << m.id << ": " << e.what() << '\n';
            status = 1;
        }
    }
    write_text_file(out_dir(cfg) / "metrics.csv", metrics_csv(rows));
    if (!c.quiet) print_summary(rows);
    return status;
}

int run_full(const Common& c, const std::string& verb) {
    const ExperimentConfig cfg = load(c);
    if (verb == "bandit-run") require_scenario(cfg, "mrt", verb);
    const ExperimentResult res = run_experiment(cfg);
    write_experiment_outputs(res, out_dir(cfg));
    if (!c.quiet) {
        print_summary(res.metrics);
        std::cout << "outputs in " << out_dir(cfg).string() << '\n';
    }
    for (const auto& f : res.failures)
        std::cerr << f.method << " (replication " << f.replication << "): " << f.message << '\n';
    return res.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential decision policies: simulate, fit, evaluate, run bandits and experiments"};
    app.require_subcommand(1);
    Common c;

    auto add_common = [&](CLI::App* sub, bool data) {
        sub->add_option("--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", c.seed, "Override master_seed");
        sub->add_option("--out", c.out, "Output directory (overrides output_dir)");
        sub->add_flag("--quiet", c.quiet, "Suppress the summary on stdout");
        if (data) sub->add_option("--data", c.data, "Dataset CSV to use instead of simulating")->check(CLI::ExistingFile);
    };
    auto* simulate = app.add_subcommand("simulate", "Write a simulated dataset");
    auto* fit = app.add_subcommand("fit", "Fit offline methods and write their models");
    auto* evaluate = app.add_subcommand("evaluate", "Fit offline methods and estimate their value");
    auto* bandit = app.add_subcommand("bandit-run", "Run online methods in the trial simulator");
    auto* experiment = app.add_subcommand("experiment", "Run a full replicated experiment");
    add_common(simulate, false);
    add_common(fit, true);
    add_common(evaluate, true);
    add_common(bandit, false);
    add_common(experiment, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*simulate) return run_simulate(c);
        if (*fit) return run_fit(c);
        if (*evaluate) return run_evaluate(c);
        if (*bandit) return run_full(c, "bandit-run");
        return run_full(c, "experiment");
    } catch (const ConfigError& e) {
        std::cerr << "invalid config:\n";
        for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const BadInput& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
