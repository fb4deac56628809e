#include "dynamics/identities.hpp"

#include <algorithm>
#include <cstdlib>

namespace qk {

long long mobius_orthogonality_defect(int m) {
  long long sum = 0;
  for (const Partition& p : set_partitions(static_cast<std::size_t>(m)))
    sum += mobius_coefficient(p);
  return std::llabs(sum - (m == 1 ? 1 : 0));
}

double cumulant_zero_time_residual(const Dynamics& dyn, int s, int n,
                                   const std::vector<LabeledOperator>& probes) {
  const ClusteredSet set =
      ClusteredSet::clustered(label_range(1, s), label_range(s + 1, s + n));
  double worst = 0.0;
  for (const auto& f : probes) {
    LabeledOperator r = dyn.cumulant_apply(0.0, set, f);
    if (n == 0) r -= f;
    worst = std::max(worst, trace_norm(r));
  }
  return worst;
}

double cluster_inversion_residual(const Dynamics& dyn, int s, int n, double t,
                                  const std::vector<LabeledOperator>& probes) {
  const Labels y = label_range(1, s);
  const ClusteredSet set = ClusteredSet::clustered(y, label_range(s + 1, s + n));
  double worst = 0.0;
  for (const auto& f : probes) {
    LabeledOperator acc(f.dim(), f.labels(), Matrix::Zero(f.side(), f.side()));
    for (const Partition& p : partitions(set)) {
      LabeledOperator x = f;
      for (const auto& block : p.blocks) {
        Labels singles;
        bool with_cluster = false;
        for (std::size_t e : block) {
          if (e == 0) {
            with_cluster = true;
            continue;
          }
          singles.push_back(set.elements[e].front());
        }
        const ClusteredSet sub =
            with_cluster ? ClusteredSet::clustered(y, singles) : ClusteredSet::plain(singles);
        x = dyn.cumulant_apply(t, sub, x);
      }
      acc += x;
    }
    worst = std::max(worst, trace_norm(acc - dyn.evolve(t, f)));
  }
  return worst;
}

double traced_closed_form_residual(const GeneratedEvolution& gen, double t, int s, int n,
                                   std::uint64_t seed) {
  const Labels y = label_range(1, s);
  const Labels added = label_range(s + 1, s + n);
  const Labels all = label_range(1, s + n);
  double worst = 0.0;
  for (const auto& probe : probe_operators(gen.dynamics().dim(), all, seed)) {
    const LabeledOperator f = symmetrize(probe);
    const LabeledOperator a = partial_trace(gen.apply_generated(t, y, added, f), y);
    const LabeledOperator b = partial_trace(gen.apply_closed_form(t, y, added, f), y);
    worst = std::max(worst, trace_norm(a - b));
  }
  return worst;
}

double round_trip_residual(const Dynamics& dyn, double t,
                           const std::vector<LabeledOperator>& probes) {
  double worst = 0.0;
  for (const auto& f : probes)
    worst = std::max(worst, trace_norm(dyn.evolve(-t, dyn.evolve(t, f)) - f));
  return worst;
}

}  // namespace qk
