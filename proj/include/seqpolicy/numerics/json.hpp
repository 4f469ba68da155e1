#pragma once

#include <json.hpp>

#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

/// Row-major nested array.
inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        rows.push_back(Vector(r.begin(), r.end()));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw SchemaError("matrix must be a JSON array of rows");
    Matrix m;
    for (const auto& r : j) m.append_row(r.get<Vector>());
    return m;
}

}  // namespace seqpolicy
