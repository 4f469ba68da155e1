#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/simulators/mrt.hpp"
#include "seqpolicy/simulators/smart.hpp"

namespace seqpolicy {

/// Hyperparameter of one method kind: default, integer-ness and admissible range.
struct ParamSpec {
    const char* key;
    double fallback;
    bool integer;
    double lo;
    bool lo_open;
    double hi;
    bool hi_open;

    bool admits(double v) const {
        if (!std::isfinite(v)) return false;
        if (integer && v != std::floor(v)) return false;
        if (lo_open ? !(v > lo) : !(v >= lo)) return false;
        if (hi_open ? !(v < hi) : !(v <= hi)) return false;
        return true;
    }

    std::string range() const {
        auto num = [](double v) {
            if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
            std::ostringstream os;
            os << v;
            return os.str();
        };
        return std::string(integer ? "integer in " : "") + (lo_open ? "(" : "[") + num(lo) + ", " + num(hi) +
               (hi_open ? ")" : "]");
    }
};

struct MethodKind {
    const char* name;
    bool online;
    std::vector<ParamSpec> params;
};

inline const std::vector<MethodKind>& method_kinds() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    static const std::vector<MethodKind> kinds{
        {"uniform", true, {}},
        {"static", true, {{"arm", 0, true, 0, false, inf, true}}},
        {"linucb",
         true,
         {{"alpha", 1.0, false, 0, false, inf, true},
          {"lambda", 1.0, false, 0, true, inf, true},
          {"burn_in", 0, true, 0, false, inf, true}}},
        {"lints",
         true,
         {{"nu", 1.0, false, 0, false, inf, true},
          {"lambda", 1.0, false, 0, true, inf, true},
          {"burn_in", 0, true, 0, false, inf, true},
          {"propensity_draws", 100, true, 0, false, inf, true}}},
        {"nig_ts",
         true,
         {{"prior_var", 1.0, false, 0, true, inf, true},
          {"a", 1.0, false, 0, true, inf, true},
          {"b", 1.0, false, 0, true, inf, true},
          {"burn_in", 0, true, 0, false, inf, true},
          {"propensity_draws", 100, true, 0, false, inf, true}}},
        {"actor_critic",
         true,
         {{"pi_min", 0.1, false, 0, true, 0.5, true},
          {"alpha_cc", 0.1, false, 0, true, 1, true},
          {"lagrange", 0.01, false, 0, false, inf, true},
          {"lambda", 1.0, false, 0, false, inf, true},
          {"burn_in", 10, true, 0, false, inf, true},
          {"refit_every", 10, true, 1, false, inf, true}}},
        {"q_learning", false, {{"gamma", 1.0, false, 0, false, 1, false}, {"lambda", 1e-6, false, 0, false, inf, true}}},
        {"bowl", false, {{"lambda", 1e-3, false, 0, true, inf, true}, {"iterations", 10000, true, 1, false, inf, true}}},
        {"sowl",
         false,
         {{"lambda", 1e-3, false, 0, true, inf, true},
          {"iterations", 5000, true, 1, false, inf, true},
          {"restarts", 10, true, 1, false, inf, true}}},
    };
    return kinds;
}

inline const MethodKind* find_method_kind(const std::string& name) {
    for (const auto& k : method_kinds())
        if (name == k.name) return &k;
    return nullptr;
}

struct MethodConfig {
    std::string id;
    std::string kind;
    // Every parameter of the kind, defaults filled in.
    std::map<std::string, double> params;

    double real(const std::string& key) const { return params.at(key); }
    std::size_t count(const std::string& key) const { return static_cast<std::size_t>(params.at(key)); }
    bool online() const { return find_method_kind(kind)->online; }

    friend bool operator==(const MethodConfig&, const MethodConfig&) = default;
};

struct SmartEnv {
    SmartConfig config;
    std::size_t n = 1000;
    std::size_t test_size = 10000;
};

struct MrtEnv {
    MrtConfig config;
    std::size_t users = 1;
};

struct ExperimentConfig {
    std::string scenario;  // "smart" or "mrt"
    std::uint64_t master_seed = 0;
    std::size_t replications = 1;
    std::string output_dir = "out";
    // Every k-th day of the regret trace is written.
    std::size_t trace_stride = 1;
    SmartEnv smart;
    MrtEnv mrt;
    std::vector<MethodConfig> methods;

    nlohmann::json to_json() const;
    /// The one canonical serialization: sorted keys, two-space indent.
    std::string canonical() const { return to_json().dump(2) + "\n"; }
    /// to_json without output_dir: what the results depend on, not where they go.
    nlohmann::json identity() const {
        nlohmann::json j = to_json();
        j.erase("output_dir");
        return j;
    }
};

namespace detail {

/// Reads typed fields from one JSON object, collecting every violation under
/// a dotted path and rejecting unknown keys.
class FieldReader {
  public:
    FieldReader(const nlohmann::json& obj, std::string path, std::vector<std::string>& errors)
        : obj_(obj), path_(std::move(path)), errors_(errors) {
        if (!obj_.is_object()) fail("", "expected an object");
    }

    bool has(const std::string& key) const { return obj_.is_object() && obj_.contains(key); }

    const nlohmann::json* raw(const std::string& key) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
        return &obj_.at(key);
    }

    double real(const std::string& key, double fallback) {
        const auto* j = raw(key);
        if (!j) return fallback;
        if (!j->is_number()) {
            fail(key, "expected a number");
            return fallback;
        }
        return j->get<double>();
    }

    std::size_t count(const std::string& key, std::size_t fallback) {
        const auto* j = raw(key);
        if (!j) return fallback;
        if (!j->is_number_unsigned() && !(j->is_number_integer() && j->get<std::int64_t>() >= 0)) {
            fail(key, "expected a non-negative integer");
            return fallback;
        }
        return j->get<std::size_t>();
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        const auto* j = raw(key);
        if (!j) return fallback;
        if (!j->is_number_unsigned() && !(j->is_number_integer() && j->get<std::int64_t>() >= 0)) {
            fail(key, "expected a non-negative 64-bit integer");
            return fallback;
        }
        return j->get<std::uint64_t>();
    }

    bool flag(const std::string& key, bool fallback) {
        const auto* j = raw(key);
        if (!j) return fallback;
        if (!j->is_boolean()) {
            fail(key, "expected true or false");
            return fallback;
        }
        return j->get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const auto* j = raw(key);
        if (!j) return fallback;
        if (!j->is_string()) {
            fail(key, "expected a string");
            return fallback;
        }
        return j->get<std::string>();
    }

    Vector vec(const std::string& key, const Vector& fallback) {
        const auto* j = raw(key);
        if (!j) return fallback;
        Vector out;
        if (!read_vec(*j, out)) {
            fail(key, "expected an array of numbers");
            return fallback;
        }
        return out;
    }

    std::vector<Vector> rows(const std::string& key, const std::vector<Vector>& fallback) {
        const auto* j = raw(key);
        if (!j) return fallback;
        std::vector<Vector> out;
        bool ok = j->is_array();
        if (ok)
            for (const auto& r : *j) {
                Vector v;
                ok = ok && read_vec(r, v);
                out.push_back(std::move(v));
            }
        if (!ok) {
            fail(key, "expected an array of number arrays");
            return fallback;
        }
        return out;
    }

    void fail(const std::string& key, const std::string& msg) { errors_.push_back(where(key) + ": " + msg); }

    std::string where(const std::string& key) const {
        if (key.empty()) return path_.empty() ? "<root>" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    /// Reports keys that no reader asked for.
    void finish() {
        if (!obj_.is_object()) return;
        for (const auto& [k, v] : obj_.items())
            if (!seen_.count(k)) fail(k, "unknown key");
    }

  private:
    static bool read_vec(const nlohmann::json& j, Vector& out) {
        if (!j.is_array()) return false;
        for (const auto& x : j) {
            if (!x.is_number()) return false;
            out.push_back(x.get<double>());
        }
        return true;
    }

    const nlohmann::json& obj_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
};

inline nlohmann::json outcome_to_json(const LinearOutcomeModel& m) {
    return {{"intercept", m.intercept},
            {"coef", m.coef},
            {"arm_intercept", m.arm_intercept},
            {"arm_coef", m.arm_coef},
            {"noise_sd", m.noise_sd}};
}

inline LinearOutcomeModel read_outcome(FieldReader& parent, const std::string& key, std::size_t dim, std::size_t arms,
                                       std::vector<std::string>& errors) {
    LinearOutcomeModel m;
    m.coef.assign(dim, 0.0);
    m.arm_intercept.assign(arms, 0.0);
    m.arm_coef.assign(arms, Vector(dim, 0.0));
    const auto* j = parent.raw(key);
    if (!j) return m;
    FieldReader r(*j, parent.where(key), errors);
    m.intercept = r.real("intercept", m.intercept);
    m.coef = r.vec("coef", m.coef);
    m.arm_intercept = r.vec("arm_intercept", m.arm_intercept);
    m.arm_coef = r.rows("arm_coef", m.arm_coef);
    m.noise_sd = r.real("noise_sd", m.noise_sd);
    r.finish();
    return m;
}

inline nlohmann::json smart_to_json(const SmartEnv& e) {
    const SmartConfig& c = e.config;
    nlohmann::json j = {{"n", e.n},
                        {"test_size", e.test_size},
                        {"state_dim", c.state_dim},
                        {"stage1_arms", c.stage1_arms},
                        {"stage1_probs", c.stage1_probs},
                        {"stage1", outcome_to_json(c.stage1)},
                        {"responder_threshold", c.responder_threshold},
                        {"stage2_arms", c.stage2_arms},
                        {"stage2_probs_responder", c.stage2_probs_responder},
                        {"stage2_probs_nonresponder", c.stage2_probs_nonresponder},
                        {"rerandomize_responders", c.rerandomize_responders},
                        {"stage2", outcome_to_json(c.stage2)}};
    j["stage1_propensity"] = c.stage1_propensity
                                 ? nlohmann::json{{"intercept", c.stage1_propensity->intercept},
                                                  {"coef", c.stage1_propensity->coef}}
                                 : nlohmann::json(nullptr);
    return j;
}

inline SmartEnv read_smart(const nlohmann::json& j, std::vector<std::string>& errors) {
    SmartEnv e;
    SmartConfig& c = e.config;
    FieldReader r(j, "env", errors);
    e.n = r.count("n", e.n);
    e.test_size = r.count("test_size", e.test_size);
    if (e.n < 1) r.fail("n", "must be >= 1");
    if (e.test_size < 1) r.fail("test_size", "must be >= 1");
    c.state_dim = r.count("state_dim", c.state_dim);
    c.stage1_arms = r.count("stage1_arms", c.stage1_arms);
    c.stage2_arms = r.count("stage2_arms", c.stage2_arms);
    auto uniform = [](std::size_t k) { return Vector(k, k ? 1.0 / static_cast<double>(k) : 0.0); };
    c.stage1_probs = r.vec("stage1_probs", uniform(c.stage1_arms));
    c.stage2_probs_responder = r.vec("stage2_probs_responder", uniform(c.stage2_arms));
    c.stage2_probs_nonresponder = r.vec("stage2_probs_nonresponder", uniform(c.stage2_arms));
    c.responder_threshold = r.real("responder_threshold", c.responder_threshold);
    c.rerandomize_responders = r.flag("rerandomize_responders", c.rerandomize_responders);
    if (const auto* p = r.raw("stage1_propensity"); p && !p->is_null()) {
        FieldReader pr(*p, "env.stage1_propensity", errors);
        LogisticPropensity lp;
        lp.intercept = pr.real("intercept", 0.0);
        lp.coef = pr.vec("coef", Vector(c.state_dim, 0.0));
        pr.finish();
        c.stage1_propensity = lp;
    }
    c.stage1 = read_outcome(r, "stage1", c.state_dim, c.stage1_arms, errors);
    c.stage2 = read_outcome(r, "stage2", c.history_dim(), c.stage2_arms, errors);
    r.finish();
    for (auto& v : c.violations()) errors.push_back("env: " + v);
    return e;
}

inline nlohmann::json mrt_to_json(const MrtEnv& e) {
    const MrtConfig& c = e.config;
    return {{"users", e.users},
            {"arms", c.arms},
            {"days", c.days},
            {"z_max", c.z_max},
            {"context_dim", c.context_dim},
            {"context_sd", c.context_sd},
            {"arm_intercept", c.arm_intercept},
            {"arm_context_coef", c.arm_context_coef},
            {"habituation_coef", c.habituation_coef},
            {"noise_sd", c.noise_sd},
            {"missing_prob", c.missing_prob},
            {"burn_in_days", c.burn_in_days},
            {"round_rewards", c.round_rewards},
            {"zero_as_missing", c.zero_as_missing},
            {"missing_update", c.missing_update == MissingUpdate::Locf ? "locf" : "skip"}};
}

inline MrtEnv read_mrt(const nlohmann::json& j, std::vector<std::string>& errors) {
    MrtEnv e;
    MrtConfig& c = e.config;
    FieldReader r(j, "env", errors);
    e.users = r.count("users", e.users);
    if (e.users < 1) r.fail("users", "must be >= 1");
    c.arms = r.count("arms", c.arms);
    c.days = r.count("days", c.days);
    const std::size_t z = r.count("z_max", static_cast<std::size_t>(c.z_max));
    if (z > 1000000) r.fail("z_max", "is implausibly large");
    c.z_max = static_cast<int>(std::min<std::size_t>(z, 1000000));
    c.context_dim = r.count("context_dim", c.context_dim);
    c.context_sd = r.real("context_sd", c.context_sd);
    c.arm_intercept = r.vec("arm_intercept", Vector(c.arms, 0.0));
    c.arm_context_coef = r.rows("arm_context_coef", std::vector<Vector>(c.arms, Vector(c.context_dim, 0.0)));
    c.habituation_coef = r.vec("habituation_coef", Vector(c.arms, 0.0));
    c.noise_sd = r.real("noise_sd", c.noise_sd);
    c.missing_prob = r.real("missing_prob", c.missing_prob);
    c.burn_in_days = r.count("burn_in_days", c.burn_in_days);
    c.round_rewards = r.flag("round_rewards", c.round_rewards);
    c.zero_as_missing = r.flag("zero_as_missing", c.zero_as_missing);
    const std::string mu = r.text("missing_update", "skip");
    if (mu == "skip")
        c.missing_update = MissingUpdate::Skip;
    else if (mu == "locf")
        c.missing_update = MissingUpdate::Locf;
    else
        r.fail("missing_update", "expected \"skip\" or \"locf\", got \"" + mu + "\"");
    r.finish();
    for (auto& v : c.violations()) errors.push_back("env: " + v);
    return e;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    // nlohmann reports the 1-based offset of the offending byte.
    const std::size_t upto = std::min(byte == 0 ? 0 : byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < upto; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

inline nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json methods_json = nlohmann::json::array();
    for (const auto& m : methods) {
        nlohmann::json params = nlohmann::json::object();
        const MethodKind* kind = find_method_kind(m.kind);
        for (const auto& spec : kind->params) {
            const double v = m.params.at(spec.key);
            if (spec.integer)
                params[spec.key] = static_cast<std::uint64_t>(v);
            else
                params[spec.key] = v;
        }
        methods_json.push_back({{"id", m.id}, {"kind", m.kind}, {"params", params}});
    }
    return {{"scenario", scenario},
            {"master_seed", master_seed},
            {"replications", replications},
            {"output_dir", output_dir},
            {"trace_stride", trace_stride},
            {"env", scenario == "smart" ? detail::smart_to_json(smart) : detail::mrt_to_json(mrt)},
            {"methods", methods_json}};
}

/// Parses and validates a config document. Syntax errors raise ParseError
/// with the line and column; every validation problem is collected into one
/// ConfigError.
inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        throw ParseError("config is not valid JSON", line, col);
    }

    std::vector<std::string> errors;
    ExperimentConfig cfg;
    detail::FieldReader r(root, "", errors);
    cfg.scenario = r.text("scenario", "");
    if (cfg.scenario != "smart" && cfg.scenario != "mrt")
        errors.push_back("scenario: expected \"smart\" or \"mrt\"" +
                         (cfg.scenario.empty() ? std::string(" (missing)") : ", got \"" + cfg.scenario + "\""));
    cfg.master_seed = r.seed("master_seed", cfg.master_seed);
    cfg.replications = r.count("replications", cfg.replications);
    if (cfg.replications < 1) errors.push_back("replications: must be >= 1");
    cfg.output_dir = r.text("output_dir", cfg.output_dir);
    cfg.trace_stride = r.count("trace_stride", cfg.trace_stride);
    if (cfg.trace_stride < 1) errors.push_back("trace_stride: must be >= 1");

    static const nlohmann::json empty = nlohmann::json::object();
    const nlohmann::json* env = r.raw("env");
    if (cfg.scenario == "smart") cfg.smart = detail::read_smart(env ? *env : empty, errors);
    if (cfg.scenario == "mrt") cfg.mrt = detail::read_mrt(env ? *env : empty, errors);

    const nlohmann::json* methods = r.raw("methods");
    if (!methods || !methods->is_array() || methods->empty()) {
        errors.push_back("methods: expected a non-empty array of method blocks");
    } else {
        std::set<std::string> ids;
        for (std::size_t i = 0; i < methods->size(); ++i) {
            const std::string path = "methods[" + std::to_string(i) + "]";
            detail::FieldReader mr((*methods)[i], path, errors);
            MethodConfig m;
            m.kind = mr.text("kind", "");
            m.id = mr.text("id", m.kind);
            const MethodKind* kind = find_method_kind(m.kind);
            const nlohmann::json* params = mr.raw("params");
            mr.finish();
            if (!kind) {
                errors.push_back(path + ".kind: unknown method kind \"" + m.kind + "\"");
                continue;
            }
            if (!ids.insert(m.id).second) errors.push_back(path + ".id: duplicate id \"" + m.id + "\"");
            if (cfg.scenario == "smart" && kind->online)
                errors.push_back(path + ".kind: \"" + m.kind + "\" is an online method; the smart scenario needs an offline one");
            if (cfg.scenario == "mrt" && !kind->online)
                errors.push_back(path + ".kind: \"" + m.kind + "\" is an offline method; the mrt scenario needs an online one");
            detail::FieldReader pr(params ? *params : empty, path + ".params", errors);
            for (const auto& spec : kind->params) {
                const double v = pr.real(spec.key, spec.fallback);
                if (!spec.admits(v)) pr.fail(spec.key, "must lie in " + spec.range());
                m.params[spec.key] = v;
            }
            pr.finish();
            if (cfg.scenario == "mrt") {
                if (m.kind == "static" && m.params["arm"] >= static_cast<double>(cfg.mrt.config.arms))
                    errors.push_back(path + ".params.arm: exceeds the number of arms");
                if (m.kind == "actor_critic" && cfg.mrt.config.arms != 2)
                    errors.push_back(path + ".kind: actor_critic needs env.arms = 2");
            }
            cfg.methods.push_back(std::move(m));
        }
    }
    r.finish();
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace seqpolicy
