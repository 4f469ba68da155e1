#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/errors.hpp"

namespace seqpolicy {

/// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::size_t line, std::size_t column) {
    double v = 0.0;
    // from_chars rejects a leading '+', which some writers emit.
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("not a number: '" + std::string(s) + "'", line, column);
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    return out;
}

/// Columns: unit_id, stage, state_0..state_{p-1}, action, reward, behavior_prob.
/// p is the largest per-stage state dimension; stages with fewer state
/// entries leave the trailing cells empty. An empty reward cell is MISSING.
inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
    const std::size_t p = data.schema().max_state_dim();
    os << "unit_id,stage";
    for (std::size_t j = 0; j < p; ++j) os << ",state_" << j;
    os << ",action,reward,behavior_prob\n";
    for (const auto& tr : data.trajectories()) {
        for (std::size_t t = 0; t < tr.records.size(); ++t) {
            const auto& r = tr.records[t];
            os << tr.unit_id << ',' << t;
            for (std::size_t j = 0; j < p; ++j) {
                os << ',';
                if (j < r.state.size()) os << format_double(r.state[j]);
            }
            os << ',' << r.action << ',';
            if (r.reward) os << format_double(*r.reward);
            os << ',' << format_double(r.behavior_prob) << '\n';
        }
    }
}

/// Inverse of write_dataset_csv. Rows of one unit must be contiguous and in
/// stage order; the schema (usually from a config sidecar) supplies arities.
inline Dataset read_dataset_csv(std::istream& is, const Schema& schema) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(is, line)) throw ParseError("empty dataset file", 1, 1);
    const auto header = split_csv_line(line);
    if (header.size() < 5 || header[0] != "unit_id" || header[1] != "stage")
        throw ParseError("unexpected dataset header", 1, 1);
    const std::size_t p = header.size() - 5;
    for (std::size_t j = 0; j < p; ++j)
        if (header[2 + j] != "state_" + std::to_string(j))
            throw ParseError("expected column state_" + std::to_string(j), 1, 3 + j);
    if (header[2 + p] != "action" || header[3 + p] != "reward" || header[4 + p] != "behavior_prob")
        throw ParseError("expected trailing columns action,reward,behavior_prob", 1, 3 + p);

    std::vector<Trajectory> trajectories;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             lineno, 1);
        const std::string& unit = cells[0];
        const auto stage = static_cast<std::size_t>(parse_double(cells[1], lineno, 2));
        if (trajectories.empty() || trajectories.back().unit_id != unit) {
            trajectories.push_back(Trajectory{unit, {}});
        }
        auto& tr = trajectories.back();
        if (stage != tr.records.size())
            throw ParseError("stage " + std::to_string(stage) + " out of order for unit '" + unit + "'",
                             lineno, 2);
        StageRecord rec;
        const std::size_t dim = schema.state_dim(stage);
        if (dim > p) throw SchemaError("schema state dimension exceeds CSV state columns");
        for (std::size_t j = 0; j < p; ++j) {
            const std::string& c = cells[2 + j];
            if (j < dim) {
                if (c.empty()) throw ParseError("missing state value", lineno, 3 + j);
                rec.state.push_back(parse_double(c, lineno, 3 + j));
            } else if (!c.empty()) {
                throw ParseError("state value beyond the stage dimension", lineno, 3 + j);
            }
        }
        const double action = parse_double(cells[2 + p], lineno, 3 + p);
        if (action < 0 || action != static_cast<double>(static_cast<std::size_t>(action)))
            throw ParseError("action must be a nonnegative integer", lineno, 3 + p);
        rec.action = static_cast<std::size_t>(action);
        if (!cells[3 + p].empty()) rec.reward = parse_double(cells[3 + p], lineno, 4 + p);
        rec.behavior_prob = parse_double(cells[4 + p], lineno, 5 + p);
        tr.records.push_back(std::move(rec));
    }
    return Dataset(schema, std::move(trajectories));
}

inline std::string dataset_to_csv(const Dataset& data) {
    std::ostringstream os;
    write_dataset_csv(os, data);
    return os.str();
}

}  // namespace seqpolicy
