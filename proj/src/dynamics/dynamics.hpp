#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "comb/cluster_comb.hpp"
#include "core/labeled_operator.hpp"

namespace qk {

/// One-particle kinetic matrix K, symmetric pair potential Phi and the
/// scaling parameter epsilon of H_n = sum_i K(i) + eps sum_{i<j} Phi(i,j).
struct HamiltonianSpec {
  LabeledOperator kinetic;    // labels {1}
  LabeledOperator potential;  // labels {1,2}
  double epsilon = 1.0;

  /// Throws InvalidArgument listing the first violated invariant.
  void validate() const;
};

enum class GeneratorKind { Free, Interaction, Full };

/// Evolution groups G_n(-t) f = exp(-itH_n) f exp(itH_n), their generators,
/// and cumulants of groups. Eigendecompositions of H_n are cached per n and
/// shared between threads.
class Dynamics {
 public:
  explicit Dynamics(HamiltonianSpec spec);

  int dim() const { return spec_.kinetic.dim(); }
  const HamiltonianSpec& spec() const { return spec_; }
  double epsilon() const { return spec_.epsilon; }

  /// H_n on labels 1..n.
  LabeledOperator hamiltonian(std::size_t n) const;
  /// H_{|labels|} placed on the given labels.
  LabeledOperator hamiltonian_on(const Labels& labels) const;

  std::shared_ptr<const Propagator> propagator(std::size_t n) const;
  /// exp(-itH_{|block|}) on the block labels.
  LabeledOperator block_unitary(const Labels& block, double t) const;
  /// Tensor product of one-particle exp(-itK) over `particles`.
  LabeledOperator free_unitary(const Labels& particles, double t) const;

  /// G_n(-t) f with n = arity of f.
  LabeledOperator evolve(double t, const LabeledOperator& f) const;
  /// G_{|block|}(-t, block) f, identity on the remaining labels of f.
  LabeledOperator evolve_block(double t, const Labels& block,
                               const LabeledOperator& f) const;
  /// prod_{i in particles} G_1(-t, i) f.
  LabeledOperator evolve_free(double t, const Labels& particles,
                              const LabeledOperator& f) const;

  /// -i [H_part, f]; `which` names the particle(s) for Free (one label) and
  /// Interaction (two labels), and is ignored for Full.
  LabeledOperator generator_apply(GeneratorKind kind, const Labels& which,
                                  const LabeledOperator& f) const;

  /// Cumulant A_{1+n}(-t, s) applied to f (f may carry extra labels).
  LabeledOperator cumulant_apply(double t, const ClusteredSet& s,
                                 const LabeledOperator& f) const;

  /// Scattering cumulant: A_{1+n}(-t) [ g_cluster . prod_i G_1(t,i) f ].
  LabeledOperator scattering_cumulant_apply(double t, const ClusteredSet& s,
                                            const LabeledOperator& g_cluster,
                                            const LabeledOperator& f) const;

 private:
  HamiltonianSpec spec_;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, std::shared_ptr<const Propagator>> cache_;
  std::shared_ptr<const Propagator> free_;
};

/// U f U^dagger with U embedded onto the labels of f.
LabeledOperator conjugate_by(const LabeledOperator& u, const LabeledOperator& f);
/// g f with g embedded onto the labels of f.
LabeledOperator left_multiply(const LabeledOperator& g, const LabeledOperator& f);

}  // namespace qk
