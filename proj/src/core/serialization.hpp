#pragma once

#include <json.hpp>

#include "core/labeled_operator.hpp"

namespace qk {

/// {"dim": d, "labels": [...], "data": [[re, im], ...]} with data row-major.
nlohmann::json to_json(const LabeledOperator& op);
LabeledOperator operator_from_json(const nlohmann::json& j);

/// Row-major (re, im) list of a square matrix; the side is inferred.
Matrix matrix_from_pairs(const nlohmann::json& data);
nlohmann::json matrix_to_pairs(const Matrix& m);

}  // namespace qk
