#include "core/serialization.hpp"

#include <cmath>

namespace qk {

nlohmann::json matrix_to_pairs(const Matrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      data.push_back({m(i, j).real(), m(i, j).imag()});
  return data;
}

Matrix matrix_from_pairs(const nlohmann::json& data) {
  if (!data.is_array()) throw InvalidArgument("matrix data must be an array");
  const auto count = static_cast<Eigen::Index>(data.size());
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(double(count))));
  if (side * side != count || side == 0)
    throw InvalidArgument("matrix data length is not a perfect square");
  Matrix m(side, side);
  for (Eigen::Index k = 0; k < count; ++k) {
    const auto& e = data[static_cast<std::size_t>(k)];
    if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
      m(k / side, k % side) = Complex(e[0].get<double>(), e[1].get<double>());
    else if (e.is_number())
      m(k / side, k % side) = Complex(e.get<double>(), 0.0);
    else
      throw InvalidArgument("matrix entries must be [re, im] pairs");
  }
  return m;
}

nlohmann::json to_json(const LabeledOperator& op) {
  return {{"dim", op.dim()}, {"labels", op.labels()},
          {"data", matrix_to_pairs(op.matrix())}};
}

LabeledOperator operator_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("labels") ||
      !j.contains("data"))
    throw InvalidArgument("operator JSON needs dim, labels and data");
  return LabeledOperator(j.at("dim").get<int>(), j.at("labels").get<Labels>(),
                         matrix_from_pairs(j.at("data")));
}

}  // namespace qk
