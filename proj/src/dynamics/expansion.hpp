#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynamics/dynamics.hpp"
#include "hierarchy/correlations.hpp"

namespace qk {

/// Symbolic scattering cumulant Ă_{1+|added|}(t, cluster, added).
/// The leading factor of a term carries the cluster {Y}; the others carry a
/// single particle label as their cluster.
struct ScatteringFactor {
  Labels cluster;
  Labels added;

  auto operator<=>(const ScatteringFactor&) const = default;
  std::string to_string() const;
  ClusteredSet ground_set() const { return ClusteredSet::clustered(cluster, added); }
};

/// coefficient * factors[0] ∘ factors[1] ∘ ... ; the last factor acts first.
struct ExpansionTerm {
  double coefficient = 0.0;
  std::vector<ScatteringFactor> factors;
};

/// Linear combination of products of scattering cumulants.
struct Expansion {
  std::vector<ExpansionTerm> terms;

  /// Merge identical factor sequences, drop zero coefficients, sort.
  Expansion& normalize();
  std::size_t size() const { return terms.size(); }
  /// One "(coefficient, factors)" line per term.
  std::string dump() const;
  bool same_terms(const Expansion& other, double tol = 0.0) const;
};

/// Generated evolution operator 𝔊_{1+n}(t, {cluster}, added) obtained by
/// solving the kinetic cluster expansion recurrence for the highest-order
/// term. Dissection blocks are attached to strictly increasing indices.
/// Results are cached.
Expansion generated_expansion(const Labels& cluster, const Labels& added);

/// Closed-form sum over compositions and dissections (distinct indices with
/// the 1/|D|! weight). Agrees with generated_expansion after tracing out the
/// added labels against exchange-symmetric inputs.
Expansion closed_form_expansion(const Labels& cluster, const Labels& added);

/// Numerical evaluation of generated evolution operators for one Dynamics
/// and correlation family.
class GeneratedEvolution {
 public:
  static constexpr int kMaxSupportedOrder = 3;

  GeneratedEvolution(const Dynamics& dynamics, const CorrelationFamily& correlations,
                     int n_max = 2);

  int n_max() const { return n_max_; }
  const Dynamics& dynamics() const { return dyn_; }
  const CorrelationFamily& correlations() const { return corr_; }

  LabeledOperator scattering(double t, const ScatteringFactor& factor,
                             const LabeledOperator& f) const;
  LabeledOperator apply(double t, const Expansion& e, const LabeledOperator& f) const;

  /// 𝔊_{1+n}(t, {cluster}, added) f; throws "order not supported" if n > n_max.
  LabeledOperator apply_generated(double t, const Labels& cluster, const Labels& added,
                                  const LabeledOperator& f) const;
  LabeledOperator apply_closed_form(double t, const Labels& cluster, const Labels& added,
                                    const LabeledOperator& f) const;

  /// Right-hand side of the kinetic cluster expansion of Ă_{1+n}: lower
  /// generated operators composed with the dissection sums, evaluated
  /// numerically term by term.
  LabeledOperator kce_rhs(double t, const Labels& cluster, const Labels& added,
                          const LabeledOperator& f) const;

  /// max over probes of || Ă_{1+n} f - kce_rhs f ||_1 for {Y} = (1..s).
  double kce_residual(double t, std::size_t s, std::size_t n,
                      const std::vector<LabeledOperator>& probes) const;

 private:
  void check_order(std::size_t n) const;

  const Dynamics& dyn_;
  const CorrelationFamily& corr_;
  int n_max_;
};

/// Fixed probe set: 8 pseudo-random Hermitian operators, plus every matrix
/// unit when the space has at most 3 particles of dimension 2 (or side <= 8).
std::vector<LabeledOperator> probe_operators(int dim, const Labels& labels,
                                             std::uint64_t seed);

Labels label_range(int first, int last);

}  // namespace qk
