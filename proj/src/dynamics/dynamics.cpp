#include "dynamics/dynamics.hpp"

#include <algorithm>

namespace qk {

void HamiltonianSpec::validate() const {
  if (kinetic.arity() != 1) throw InvalidArgument("kinetic matrix must act on one particle");
  if (potential.arity() != 2)
    throw InvalidArgument("potential matrix must act on two particles");
  if (kinetic.dim() != potential.dim())
    throw InvalidArgument("kinetic and potential dimensions differ");
  if (!is_hermitian(kinetic.matrix())) throw InvalidArgument("kinetic matrix is not Hermitian");
  if (!is_hermitian(potential.matrix()))
    throw InvalidArgument("potential matrix is not Hermitian");
  const double scale = std::max(1.0, potential.matrix().cwiseAbs().maxCoeff());
  if (symmetry_report(potential).max_deviation > kHermitianTolerance * scale)
    throw InvalidArgument("potential is not symmetric under particle exchange");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
}

Dynamics::Dynamics(HamiltonianSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  spec_.kinetic = spec_.kinetic.relabeled({1});
  spec_.potential = spec_.potential.relabeled({1, 2});
  free_ = std::make_shared<const Propagator>(spec_.kinetic);
}

LabeledOperator Dynamics::hamiltonian(std::size_t n) const {
  if (n < 1) throw InvalidArgument("hamiltonian: n must be >= 1");
  Labels labels(n);
  for (std::size_t k = 0; k < n; ++k) labels[k] = static_cast<int>(k) + 1;
  const Eigen::Index side = space_size(dim(), n);
  LabeledOperator h(dim(), labels, Matrix::Zero(side, side));
  for (int i : labels) h += embed(spec_.kinetic.relabeled({i}), labels);
  for (int i : labels)
    for (int j : labels)
      if (i < j)
        h += spec_.epsilon * embed(spec_.potential.relabeled({i, j}), labels);
  return h;
}

LabeledOperator Dynamics::hamiltonian_on(const Labels& labels) const {
  Labels sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  return hamiltonian(labels.size()).relabeled(std::move(sorted));
}

std::shared_ptr<const Propagator> Dynamics::propagator(std::size_t n) const {
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(n);
    if (it != cache_.end()) return it->second;
  }
  // Build outside the lock; a concurrent fill computes the same value.
  auto p = std::make_shared<const Propagator>(hamiltonian(n));
  std::lock_guard lock(mutex_);
  return cache_.emplace(n, std::move(p)).first->second;
}

LabeledOperator Dynamics::block_unitary(const Labels& block, double t) const {
  Labels sorted = block;
  std::sort(sorted.begin(), sorted.end());
  return LabeledOperator(dim(), std::move(sorted), propagator(block.size())->unitary(t));
}

LabeledOperator Dynamics::free_unitary(const Labels& particles, double t) const {
  const Matrix u1 = free_->unitary(t);
  LabeledOperator u = LabeledOperator::scalar(dim(), 1.0);
  for (int i : particles) u = tensor(u, LabeledOperator(dim(), {i}, u1));
  return u;
}

LabeledOperator conjugate_by(const LabeledOperator& u, const LabeledOperator& f) {
  const LabeledOperator full = embed(u, f.labels());
  return LabeledOperator(f.dim(), f.labels(),
                         full.matrix() * f.matrix() * full.matrix().adjoint());
}

LabeledOperator left_multiply(const LabeledOperator& g, const LabeledOperator& f) {
  const LabeledOperator full = embed(g, f.labels());
  return LabeledOperator(f.dim(), f.labels(), full.matrix() * f.matrix());
}

LabeledOperator Dynamics::evolve(double t, const LabeledOperator& f) const {
  return conjugate_by(block_unitary(f.labels(), t), f);
}

LabeledOperator Dynamics::evolve_block(double t, const Labels& block,
                                       const LabeledOperator& f) const {
  return conjugate_by(block_unitary(block, t), f);
}

LabeledOperator Dynamics::evolve_free(double t, const Labels& particles,
                                      const LabeledOperator& f) const {
  return conjugate_by(free_unitary(particles, t), f);
}

LabeledOperator Dynamics::generator_apply(GeneratorKind kind, const Labels& which,
                                          const LabeledOperator& f) const {
  LabeledOperator h;
  switch (kind) {
    case GeneratorKind::Free:
      if (which.size() != 1) throw InvalidArgument("free generator needs one label");
      h = embed(spec_.kinetic.relabeled(which), f.labels());
      break;
    case GeneratorKind::Interaction: {
      if (which.size() != 2 || which[0] == which[1])
        throw InvalidArgument("interaction generator needs two labels");
      Labels pair = which;
      std::sort(pair.begin(), pair.end());
      h = embed(spec_.potential.relabeled(pair), f.labels());
      break;
    }
    case GeneratorKind::Full:
      h = hamiltonian_on(f.labels());
      break;
  }
  const Matrix c = h.matrix() * f.matrix() - f.matrix() * h.matrix();
  return LabeledOperator(f.dim(), f.labels(), Complex(0.0, -1.0) * c);
}

LabeledOperator Dynamics::cumulant_apply(double t, const ClusteredSet& s,
                                         const LabeledOperator& f) const {
  const Labels all = declusterize(s);
  for (int l : all) (void)f.slot_of(l);
  LabeledOperator acc(f.dim(), f.labels(), Matrix::Zero(f.side(), f.side()));
  std::map<Labels, LabeledOperator> block_cache;
  for (const Partition& p : partitions(s)) {
    LabeledOperator u = LabeledOperator::scalar(dim(), 1.0);
    for (const auto& block : p.blocks) {
      Labels theta = declusterize(s, block);
      std::sort(theta.begin(), theta.end());
      auto it = block_cache.find(theta);
      if (it == block_cache.end())
        it = block_cache.emplace(theta, block_unitary(theta, t)).first;
      u = tensor(u, it->second);
    }
    acc += static_cast<double>(mobius_coefficient(p)) * conjugate_by(u, f);
  }
  return acc;
}

LabeledOperator Dynamics::scattering_cumulant_apply(double t, const ClusteredSet& s,
                                                    const LabeledOperator& g_cluster,
                                                    const LabeledOperator& f) const {
  const Labels all = declusterize(s);
  LabeledOperator h = evolve_free(-t, all, f);
  h = left_multiply(g_cluster, h);
  return cumulant_apply(t, s, h);
}

}  // namespace qk
