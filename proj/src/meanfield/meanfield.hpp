#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dynamics/dynamics.hpp"
#include "hierarchy/correlations.hpp"
#include "hierarchy/hierarchy.hpp"

namespace qk {

/// t0 = (2 ||Phi||_op ||f||_1)^-1; infinite when either norm vanishes.
double horizon_t0(const Dynamics& dyn, const LabeledOperator& f1_0);

/// -N(1) f + Tr_2(-N_int(1,2)) [G_1(-t) x G_1(-t)] g_2 [G_1(t) x G_1(t)] f x f.
/// The pair potential enters without epsilon.
LabeledOperator vlasov_rhs(const Dynamics& dyn, const CorrelationFamily& corr, double t,
                           const LabeledOperator& f1);

/// Correlation-free reference: -N(1) f + Tr_2(-N_int(1,2)) f x f, written
/// directly with the mean-field Hamiltonian K + Tr_2 Phi (1 x f).
LabeledOperator hartree_rhs(const Dynamics& dyn, const LabeledOperator& f1);

struct VlasovTrajectory {
  std::vector<double> t;
  std::vector<LabeledOperator> f1;
  int substeps = 1;
  double max_trace_drift = 0.0;
  double max_hermiticity_defect = 0.0;
};

/// Four-stage integration; the coefficient groups are evaluated at the
/// stage times. `correlation_free` switches to hartree_rhs.
VlasovTrajectory vlasov_integrate(const Dynamics& dyn, const CorrelationFamily& corr,
                                  const LabeledOperator& f1_0,
                                  const std::vector<double>& t_grid,
                                  bool correlation_free = false);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int nodes, std::vector<double>& x, std::vector<double>& w);

struct VlasovSeriesResult {
  LabeledOperator value;
  std::vector<double> term_norms;
  std::vector<double> term_bounds;  // (t/t0)^n ||f||_1 ||g_{n+1}||_op
  double tail = 0.0;
  double quadrature_check = 0.0;  // distance to the doubled-node evaluation
  double t0 = 0.0;
};

/// Iterated-integral series of the limit one-particle operator; throws
/// "outside convergence horizon" for |t| >= t0.
VlasovSeriesResult vlasov_series(const Dynamics& dyn, const CorrelationFamily& corr,
                                 const LabeledOperator& f1_0, double t, int n_max,
                                 int nodes = 8);

struct LadderRow {
  double epsilon = 0.0;
  double t = 0.0;
  double distance = 0.0;
  double tail_estimate = 0.0;
  double runtime_ms = 0.0;
};

struct LadderSetup {
  HamiltonianSpec spec;  // epsilon field ignored; set per row
  const CorrelationFamily* correlations = nullptr;
  LabeledOperator f1_limit;  // F_1^0(eps) = f1_limit / eps
  double t = 0.0;
  int n_max = 2;
  int vlasov_steps = 50;
  int threads = 1;
};

/// || eps F_1(t) - f_1(t) ||_1 per eps, f_1 from vlasov_integrate.
std::vector<LadderRow> meanfield_convergence_study(const LadderSetup& setup,
                                                   const std::vector<double>& ladder);

/// || eps^s F_s(t | F_1(t)) - [prod G_1(-t)] g_s [prod G_1(t)] prod f_1(t) ||_1 per eps.
std::vector<LadderRow> correlation_propagation_residual(const LadderSetup& setup,
                                                        const std::vector<double>& ladder,
                                                        int s);

/// [prod G_1(-t)] g_s [prod G_1(t)] prod f on labels 1..s.
LabeledOperator propagated_correlation_limit(const Dynamics& dyn,
                                             const CorrelationFamily& corr, double t,
                                             const LabeledOperator& f1, int s);

/// max over probes of || (G_1(t,{Y}) - [prod G_1(-t)] g_s [prod G_1(t)]) f ||_1.
double first_order_limit_defect(const Dynamics& dyn, const CorrelationFamily& corr,
                                double t, int s, std::uint64_t seed);

/// max over probes of || G_{1+n}(t,{Y},X\Y) f ||_1 with {Y} = 1..s.
double generated_probe_norm(const Dynamics& dyn, const CorrelationFamily& corr, double t,
                            int s, int n, std::uint64_t seed);

/// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace qk
