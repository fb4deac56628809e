#include "hierarchy/correlations.hpp"

#include <algorithm>

namespace qk {

namespace {

Labels first_labels(int n) {
  Labels l(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) l[static_cast<std::size_t>(k)] = k + 1;
  return l;
}

}  // namespace

CorrelationFamily::CorrelationFamily(int dim, int max_order)
    : dim_(dim), max_order_(max_order), chaos_(true) {
  for (int n = 1; n <= max_order_; ++n)
    g_.emplace(n, LabeledOperator::identity(dim_, first_labels(n)));
}

CorrelationFamily::CorrelationFamily(int dim, std::map<int, LabeledOperator> g,
                                     Closure closure, int max_order)
    : dim_(dim), max_order_(max_order) {
  g_.emplace(1, LabeledOperator::identity(dim_, first_labels(1)));
  int top = 1;
  for (auto& [n, op] : g) {
    if (n < 2) throw InvalidArgument("correlations are indexed from n = 2");
    if (op.dim() != dim_ || op.labels() != first_labels(n))
      throw InvalidArgument("g_" + std::to_string(n) + " must act on labels 1.." +
                            std::to_string(n));
    const double scale = std::max(1.0, op.matrix().cwiseAbs().maxCoeff());
    if (symmetry_report(op).max_deviation > 1e-10 * scale)
      throw InvalidArgument("g_" + std::to_string(n) +
                            " is not permutation-symmetric");
    top = std::max(top, n);
    g_.emplace(n, op);
  }
  for (int n = 2; n <= top; ++n)
    if (!g_.count(n))
      throw InvalidArgument("missing g_" + std::to_string(n) +
                            " below the highest supplied order");
  std::map<int, LabeledOperator> supplied(g_.begin(), g_.end());
  supplied.erase(1);
  connected_ = mobius_invert(supplied, dim_);
  if (closure == Closure::Pair) {
    for (int n = top + 1; n <= max_order_; ++n)
      g_.emplace(n, partition_product_sum(connected_, dim_, first_labels(n)));
  }
  max_order_ = std::max(max_order_, top);
  max_norm_ = 0.0;
  for (const auto& [n, op] : g_) max_norm_ = std::max(max_norm_, operator_norm(op.matrix()));
  chaos_ = std::all_of(g_.begin(), g_.end(), [](const auto& kv) {
    const Matrix& m = kv.second.matrix();
    return (m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() == 0.0;
  });
}

bool CorrelationFamily::has(int n) const {
  return chaos_ || n <= 1 || g_.count(n) > 0;
}

const LabeledOperator& CorrelationFamily::g(int n) const {
  auto it = g_.find(std::max(n, 1));
  if (it == g_.end()) throw InvalidArgument("missing g_" + std::to_string(n));
  return it->second;
}

LabeledOperator CorrelationFamily::on(const Labels& labels) const {
  if (labels.empty()) return LabeledOperator::scalar(dim_, 1.0);
  Labels sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  if (chaos_) return LabeledOperator::identity(dim_, std::move(sorted));
  return g(static_cast<int>(labels.size())).relabeled(std::move(sorted));
}

LabeledOperator CorrelationFamily::cluster(const ClusteredSet& s) const {
  return on(declusterize(s));
}

}  // namespace qk
