#pragma once

#include <map>
#include <string>

#include "comb/cluster_comb.hpp"
#include "core/labeled_operator.hpp"

namespace qk {

/// Initial correlation operators g_n (n >= 2) together with their connected
/// (Moebius-inverted) family.
///
/// Orders above the highest supplied one are generated by the closure rule:
/// `Closure::Pair` sets the missing connected operators to zero, so g_n is
/// the partition sum of the lower connected operators; `Closure::None`
/// leaves them undefined and asking for them throws.
class CorrelationFamily {
 public:
  enum class Closure { None, Pair };

  /// Chaos family, g_n = I for every n.
  explicit CorrelationFamily(int dim, int max_order = 6);
  CorrelationFamily(int dim, std::map<int, LabeledOperator> g, Closure closure,
                    int max_order = 6);

  int dim() const { return dim_; }
  int max_order() const { return max_order_; }
  bool is_chaos() const { return chaos_; }
  bool has(int n) const;

  /// g_n on labels 1..n (g_1 = I). Throws "missing g_n" when unavailable.
  const LabeledOperator& g(int n) const;
  /// g_{|labels|} placed on the given labels.
  LabeledOperator on(const Labels& labels) const;
  /// Correlation operator of a clustered set, g_{|theta(s)|}(theta(s)).
  LabeledOperator cluster(const ClusteredSet& s) const;

  const std::map<int, LabeledOperator>& connected() const { return connected_; }
  /// max_n ||g_n||_op over the stored orders.
  double max_operator_norm() const { return max_norm_; }

 private:
  int dim_;
  int max_order_;
  bool chaos_ = false;
  std::map<int, LabeledOperator> g_;
  std::map<int, LabeledOperator> connected_;
  double max_norm_ = 1.0;
};

}  // namespace qk
