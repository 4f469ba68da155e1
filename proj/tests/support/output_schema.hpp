#pragma once

// Independent validator for the files an experiment writes.

#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace output_schema {

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline bool is_uint(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

inline bool is_finite_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(v);
}

/// Problems found in a metrics.csv body; empty when it conforms.
inline std::vector<std::string> check_metrics(const std::string& text) {
    static const std::set<std::string> names{"value_estimate", "cum_regret", "pct_optimal_action", "coef_error"};
    std::vector<std::string> bad;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "method,replication,metric,value,step") bad.push_back("metrics header");
    std::size_t n = 1;
    while (std::getline(is, line)) {
        ++n;
        const auto c = split(line);
        const std::string at = "metrics line " + std::to_string(n);
        if (c.size() != 5) {
            bad.push_back(at + ": expected 5 cells");
            continue;
        }
        if (c[0].empty()) bad.push_back(at + ": empty method");
        if (!is_uint(c[1])) bad.push_back(at + ": replication");
        if (!names.count(c[2])) bad.push_back(at + ": metric name '" + c[2] + "'");
        if (!is_finite_number(c[3])) bad.push_back(at + ": value");
        if (!c[4].empty() && !is_uint(c[4])) bad.push_back(at + ": step");
    }
    return bad;
}

inline std::vector<std::string> check_trace(const std::string& text) {
    std::vector<std::string> bad;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "method,replication,user,day,chosen_arm,regret,cum_regret")
        bad.push_back("trace header");
    std::size_t n = 1;
    while (std::getline(is, line)) {
        ++n;
        const auto c = split(line);
        const std::string at = "trace line " + std::to_string(n);
        if (c.size() != 7) {
            bad.push_back(at + ": expected 7 cells");
            continue;
        }
        for (int k : {1, 2, 3, 4})
            if (!is_uint(c[static_cast<std::size_t>(k)])) bad.push_back(at + ": column " + std::to_string(k));
        for (int k : {5, 6}) {
            if (!is_finite_number(c[static_cast<std::size_t>(k)])) {
                bad.push_back(at + ": column " + std::to_string(k));
            } else if (std::strtod(c[static_cast<std::size_t>(k)].c_str(), nullptr) < 0.0) {
                bad.push_back(at + ": negative regret");
            }
        }
    }
    return bad;
}

}  // namespace output_schema
