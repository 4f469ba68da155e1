#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "seqpolicy/bandits/actor_critic.hpp"
#include "seqpolicy/bandits/linear.hpp"
#include "seqpolicy/bandits/nig.hpp"
#include "seqpolicy/core/agent.hpp"
#include "seqpolicy/core/csv.hpp"
#include "seqpolicy/dtr_direct/owl.hpp"
#include "seqpolicy/dtr_direct/value.hpp"
#include "seqpolicy/dtr_indirect/linear_q.hpp"
#include "seqpolicy/harness/config.hpp"
#include "seqpolicy/numerics/random.hpp"
#include "seqpolicy/simulators/mrt.hpp"
#include "seqpolicy/simulators/smart.hpp"
#include "seqpolicy/version.hpp"

namespace seqpolicy {

struct MetricsRecord {
    std::string method;
    std::size_t replication = 0;
    std::string metric;  // value_estimate | cum_regret | pct_optimal_action | coef_error
    double value = 0.0;
    std::optional<std::size_t> step;
};

struct TraceRecord {
    std::string method;
    std::size_t replication = 0;
    RegretRow row;
};

struct RunFailure {
    std::string method;
    std::size_t replication = 0;
    std::string message;
};

struct ExperimentResult {
    std::vector<MetricsRecord> metrics;
    std::vector<TraceRecord> trace;
    std::vector<RunFailure> failures;
    nlohmann::json manifest;

    bool ok() const noexcept { return failures.empty(); }
};

inline const char* const kMetricsHeader = "method,replication,metric,value,step";
inline const char* const kTraceHeader = "method,replication,user,day,chosen_arm,regret,cum_regret";

/// Worker count: SEQPOLICY_THREADS when set to a positive integer, otherwise
/// the hardware concurrency; never more than the number of tasks.
inline std::size_t worker_count(std::size_t tasks) {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SEQPOLICY_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) n = static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::min(n, tasks));
}

/// Runs f(0..n-1) on up to `threads` workers. f must not throw.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) f(i);
        });
    for (auto& t : pool) t.join();
}

/// Stream of one replication; independent of the worker that runs it.
inline RngStream replication_stream(std::uint64_t master_seed, std::size_t replication) {
    return RngStream(master_seed).split("replication", replication);
}

inline std::unique_ptr<Agent> make_online_agent(const MethodConfig& m, const MrtConfig& env) {
    const std::size_t d = env.feature_dim();
    if (m.kind == "uniform") return std::make_unique<PolicyAgent>(PolicySpec::uniform(env.arms), m.id);
    if (m.kind == "static") return std::make_unique<PolicyAgent>(PolicySpec::constant(env.arms, m.count("arm")), m.id);
    if (m.kind == "linucb") return std::make_unique<LinUcbAgent>(d, LinUcbOptions{m.real("lambda"), m.real("alpha"), m.count("burn_in")});
    if (m.kind == "lints")
        return std::make_unique<LinTsAgent>(
            d, LinTsOptions{m.real("lambda"), m.real("nu"), m.count("burn_in"), m.count("propensity_draws")});
    if (m.kind == "nig_ts") {
        NIGPosterior prior = NIGPosterior::standard(d, m.real("prior_var"), m.real("a"), m.real("b"));
        return std::make_unique<NigTsAgent>(std::move(prior), NigTsOptions{m.count("burn_in"), m.count("propensity_draws")});
    }
    if (m.kind == "actor_critic") {
        ActorCriticAgentOptions o;
        o.fit.pi_min = m.real("pi_min");
        o.fit.alpha_cc = m.real("alpha_cc");
        o.fit.lagrange = m.real("lagrange");
        o.fit.critic_lambda = m.real("lambda");
        o.burn_in = m.count("burn_in");
        o.refit_every = m.count("refit_every");
        return std::make_unique<ActorCriticAgent>(o);
    }
    throw ParameterError("'" + m.kind + "' is not an online method");
}

/// Offline fit on a two-stage SMART-shaped dataset: affine maps of the
/// baseline state at stage 0 and of the stage-1 history at stage 1.
struct OfflineFit {
    PolicySpec policy;
    nlohmann::json model;
    std::optional<LinearQModel> q;  // set for q_learning
};

inline OfflineFit fit_offline_method(const SmartConfig& env, const MethodConfig& m, const Dataset& data,
                                     std::uint64_t restart_seed = 0) {
    const std::size_t d0 = env.state_dim, d1 = env.history_dim();
    if (m.kind == "q_learning") {
        const std::vector<ArmFeatureMap> maps{{FeatureMap{d0, true}, env.stage1_arms}, {FeatureMap{d1, true}, env.stage2_arms}};
        auto model = fit_q_backward(data, maps, m.real("lambda"), m.real("gamma"));
        OfflineFit out{greedy_policy_from_q(model), model.to_json(), std::nullopt};
        out.q = std::move(model);
        return out;
    }
    if (m.kind == "bowl") {
        OwlOptions o;
        o.iterations = m.count("iterations");
        const double lam = m.real("lambda");
        const BowlFit fit = bowl_fit(data, {FeatureMap{d0, true}, FeatureMap{d1, true}}, {lam, lam}, o);
        nlohmann::json stages = nlohmann::json::array();
        for (std::size_t t = 0; t < fit.stages.size(); ++t) {
            auto j = fit.stages[t].fn.to_json();
            j["objective"] = fit.stages[t].objective;
            j["outcome_shift"] = fit.stages[t].outcome_shift;
            j["retained"] = fit.retained[t];
            stages.push_back(std::move(j));
        }
        return {fit.policy(), {{"model", "bowl"}, {"stages", stages}}, std::nullopt};
    }
    if (m.kind == "sowl") {
        SowlOptions o;
        o.iterations = m.count("iterations");
        o.restarts = m.count("restarts");
        o.seed = restart_seed;
        const SowlFit fit = sowl_fit(data, FeatureMap{d0, true}, FeatureMap{d1, true}, m.real("lambda"), o);
        return {fit.policy(),
                {{"model", "sowl"},
                 {"stages", {fit.f0.to_json(), fit.f1.to_json()}},
                 {"objective", fit.objective},
                 {"outcome_shift", fit.outcome_shift}},
                std::nullopt};
    }
    throw ParameterError("'" + m.kind + "' is not an offline method");
}

namespace detail {

struct ReplicationOutput {
    std::vector<MetricsRecord> metrics;
    std::vector<TraceRecord> trace;
    std::vector<RunFailure> failures;
};

inline void run_mrt_method(const ExperimentConfig& cfg, const MethodConfig& m, std::size_t rep, ReplicationOutput& out) {
    const MrtConfig& env = cfg.mrt.config;
    const auto res = simulate_mrt(env, [&] { return make_online_agent(m, env); }, cfg.mrt.users,
                                  replication_stream(cfg.master_seed, rep));
    double final_regret = 0.0, optimal = 0.0;
    for (const auto& row : res.trace) {
        optimal += row.optimal ? 1.0 : 0.0;
        if (row.day + 1 == env.days) final_regret += row.cum_regret;
        if ((row.day + 1) % cfg.trace_stride == 0 || row.day + 1 == env.days) out.trace.push_back({m.id, rep, row});
    }
    const double users = static_cast<double>(cfg.mrt.users);
    out.metrics.push_back({m.id, rep, "cum_regret", final_regret / users, env.days});
    out.metrics.push_back({m.id, rep, "pct_optimal_action", optimal / static_cast<double>(res.trace.size()), {}});
}

struct SmartData {
    SmartSample train;
    SmartSample test;
};

inline PolicySpec fit_offline(const ExperimentConfig& cfg, const MethodConfig& m, std::size_t rep,
                              const SmartSample& train, std::vector<MetricsRecord>& metrics) {
    const std::uint64_t seed = replication_stream(cfg.master_seed, rep).split("sowl-restarts").stream();
    OfflineFit fit = fit_offline_method(cfg.smart.config, m, train.data, seed);
    if (m.kind == "q_learning" && m.real("gamma") == 1.0)
        for (std::size_t t = 0; t < 2; ++t)
            if (const auto truth = train.truth.linear_q_coefficients(t)) {
                const auto& est = fit.q->theta[t];
                double ss = 0.0;
                for (std::size_t j = 0; j < truth->size(); ++j) ss += (est[j] - (*truth)[j]) * (est[j] - (*truth)[j]);
                metrics.push_back({m.id, rep, "coef_error", std::sqrt(ss), t});
            }
    return std::move(fit.policy);
}

inline void run_smart_method(const ExperimentConfig& cfg, const MethodConfig& m, std::size_t rep, const SmartData& d,
                             ReplicationOutput& out) {
    std::vector<MetricsRecord> metrics;
    const PolicySpec policy = fit_offline(cfg, m, rep, d.train, metrics);
    const double gamma = m.params.count("gamma") ? m.real("gamma") : 1.0;
    metrics.push_back({m.id, rep, "value_estimate", estimate_value_iptw(d.train.data, policy, gamma).point, {}});

    double hit0 = 0.0, hit1 = 0.0, both = 0.0;
    for (const auto& tr : d.test.data.trajectories()) {
        const auto& r0 = tr.records[0];
        const auto& r1 = tr.records[1];
        const bool ok0 = policy.act(0, r0.state) == d.test.truth.optimal_arm(0, r0.state);
        const bool ok1 = policy.act(1, r1.state) == d.test.truth.optimal_arm(1, r1.state);
        hit0 += ok0;
        hit1 += ok1;
        both += ok0 && ok1;
    }
    const double n = static_cast<double>(d.test.data.size());
    metrics.push_back({m.id, rep, "pct_optimal_action", hit0 / n, 0});
    metrics.push_back({m.id, rep, "pct_optimal_action", hit1 / n, 1});
    metrics.push_back({m.id, rep, "pct_optimal_action", both / n, {}});
    out.metrics.insert(out.metrics.end(), metrics.begin(), metrics.end());
}

inline ReplicationOutput run_replication(const ExperimentConfig& cfg, std::size_t rep) {
    ReplicationOutput out;
    std::optional<SmartData> smart;
    if (cfg.scenario == "smart") {
        try {
            const RngStream rng = replication_stream(cfg.master_seed, rep);
            smart = SmartData{simulate_smart(cfg.smart.config, cfg.smart.n, rng.split("train")),
                              simulate_smart(cfg.smart.config, cfg.smart.test_size, rng.split("test"))};
        } catch (const std::exception& e) {
            for (const auto& m : cfg.methods) out.failures.push_back({m.id, rep, std::string("simulation: ") + e.what()});
            return out;
        }
    }
    for (const auto& m : cfg.methods) {
        // A failed method leaves no partial metrics behind.
        ReplicationOutput part;
        try {
            if (cfg.scenario == "mrt")
                run_mrt_method(cfg, m, rep, part);
            else
                run_smart_method(cfg, m, rep, *smart, part);
        } catch (const std::exception& e) {
            out.failures.push_back({m.id, rep, e.what()});
            continue;
        }
        out.metrics.insert(out.metrics.end(), part.metrics.begin(), part.metrics.end());
        out.trace.insert(out.trace.end(), part.trace.begin(), part.trace.end());
    }
    return out;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

}  // namespace detail

/// FNV-1a of the canonical serialization.
inline std::string config_hash(const ExperimentConfig& cfg) { return detail::hex64(fnv1a64(cfg.identity().dump(2))); }

/// Runs every method × replication. Replications run on a worker pool, each
/// from its own stream; results are merged in replication order, so the
/// output does not depend on the worker count or scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::optional<std::size_t> threads = std::nullopt) {
    std::vector<detail::ReplicationOutput> parts(cfg.replications);
    const std::size_t workers = threads ? std::max<std::size_t>(1, *threads) : worker_count(cfg.replications);
    parallel_for(cfg.replications, workers, [&](std::size_t rep) {
        try {
            parts[rep] = detail::run_replication(cfg, rep);
        } catch (const std::exception& e) {
            parts[rep].failures.push_back({"*", rep, e.what()});
        }
    });

    ExperimentResult res;
    for (auto& p : parts) {
        res.metrics.insert(res.metrics.end(), p.metrics.begin(), p.metrics.end());
        res.trace.insert(res.trace.end(), p.trace.begin(), p.trace.end());
        res.failures.insert(res.failures.end(), p.failures.begin(), p.failures.end());
    }

    nlohmann::json streams = nlohmann::json::array();
    for (std::size_t r = 0; r < cfg.replications; ++r) {
        const RngStream s = replication_stream(cfg.master_seed, r);
        streams.push_back({{"replication", r}, {"seed", s.seed()}, {"stream", detail::hex64(s.stream())}});
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : res.failures)
        failures.push_back({{"method", f.method}, {"replication", f.replication}, {"error", f.message}});
    res.manifest = {{"config", cfg.identity()},
                    {"config_hash", config_hash(cfg)},
                    {"master_seed", cfg.master_seed},
                    {"replications", cfg.replications},
                    {"replication_streams", streams},
                    {"status", res.ok() ? "ok" : "failed"},
                    {"failures", failures},
                    {"outputs", {"metrics.csv", "regret_trace.csv", "manifest.json"}},
                    {"versions",
                     {{"seqpolicy", kVersion},
                      {"nlohmann_json",
                       std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                           "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                      {"compiler", __VERSION__}}}};
    return res;
}

inline std::string metrics_csv(const std::vector<MetricsRecord>& rows) {
    std::ostringstream os;
    os << kMetricsHeader << '\n';
    for (const auto& r : rows) {
        os << r.method << ',' << r.replication << ',' << r.metric << ',' << format_double(r.value) << ',';
        if (r.step) os << *r.step;
        os << '\n';
    }
    return os.str();
}

inline std::string trace_csv(const std::vector<TraceRecord>& rows) {
    std::ostringstream os;
    os << kTraceHeader << '\n';
    for (const auto& r : rows)
        os << r.method << ',' << r.replication << ',' << r.row.user << ',' << r.row.day << ',' << r.row.chosen_arm << ','
           << format_double(r.row.regret) << ',' << format_double(r.row.cum_regret) << '\n';
    return os.str();
}

/// Creates missing parent directories.
inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("failed while writing '" + path.string() + "'");
}

/// Writes metrics.csv, regret_trace.csv and manifest.json into `dir`. The
/// manifest is always written, even when some replication failed.
inline void write_experiment_outputs(const ExperimentResult& res, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "manifest.json", res.manifest.dump(2) + "\n");
    write_text_file(dir / "metrics.csv", metrics_csv(res.metrics));
    write_text_file(dir / "regret_trace.csv", trace_csv(res.trace));
}

}  // namespace seqpolicy
