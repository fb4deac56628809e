#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynamics/dynamics.hpp"
#include "dynamics/expansion.hpp"
#include "hierarchy/correlations.hpp"

namespace qk {

struct InitialDatum {
  LabeledOperator f1_0;  // one-particle marginal F_1^0, labels {1}
  CorrelationFamily correlations;

  /// Throws InvalidArgument unless f1_0 is a positive one-particle operator
  /// of the family's dimension.
  void validate() const;
};

struct SeriesResult {
  LabeledOperator value;
  std::vector<double> term_norms;  // trace norms of the individual n-terms
  double tail = 0.0;
  std::vector<std::string> warnings;
};

/// Geometric extrapolation a_N r / (1 - r), r = a_N / a_{N-1} clamped to [0, 0.9].
double tail_estimate(const std::vector<double>& term_norms);

// Sufficient convergence radii. Crossing one yields a warning, never an error.
double bbgky_radius();
double collision_radius();
double gke_radius();
double functional_radius(int s);

/// Smallest eigenvalue of the Hermitian part.
double min_eigenvalue(const LabeledOperator& op);

/// g_s prod_{i<=s} F_1^0(i) for s = 1..s_max.
std::vector<LabeledOperator> initial_marginals(const InitialDatum& datum, int s_max);

/// prod_{i in labels} f(i).
LabeledOperator product_state(const LabeledOperator& f1, const Labels& labels);

/// sum_{n<=n_max} 1/n! Tr_{s+1..s+n} A_{1+n}(-t,{Y},X\Y) F_{s+n}(0).
SeriesResult bbgky_series(const Dynamics& dyn, const InitialDatum& datum, double t, int s,
                          int n_max);

/// eps Tr_2(-N_int(1,2)) sum_n 1/n! Tr_{3..n+2} G_{1+n}(t,{1,2},...) prod F_1(t).
SeriesResult collision_integral(const GeneratedEvolution& gen, const LabeledOperator& f1_t,
                                double t);

/// -N(1) f + collision integral.
LabeledOperator gke_rhs(const GeneratedEvolution& gen, const LabeledOperator& f1_t,
                        double t);

SeriesResult gke_series(const Dynamics& dyn, const InitialDatum& datum, double t,
                        int n_max);

struct TrajectoryPoint {
  double t = 0.0;
  LabeledOperator f1;
  double trace = 0.0;
  double trace_norm = 0.0;
  double min_eig = 0.0;
  double defect = 0.0;  // distance to gke_series at this t
  double tail = 0.0;    // series tail at this t
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  int substeps = 1;
  std::vector<std::string> warnings;
};

/// Uniform grid t_k = k * t_end / steps, k = 0..steps.
std::vector<double> uniform_grid(double t_end, int steps);

/// Number of equal RK4 substeps per grid interval so that h^4 * rhs_norm < 1e-10
/// and h <= h_max.
int rk4_substeps(double interval, double rhs_norm, double h_max);

/// Classic four-stage integration of the generalized kinetic equation.
/// When `defect_budget` is set and the defect at a grid point exceeds
/// budget + tail, throws NumericError.
Trajectory gke_integrate(const GeneratedEvolution& gen, const InitialDatum& datum,
                         const std::vector<double>& t_grid,
                         std::optional<double> defect_budget = std::nullopt);

/// sum_n 1/n! Tr_{s+1..s+n} G_{1+n}(t,{Y},X\Y) prod f1_t.
SeriesResult marginal_functional(const GeneratedEvolution& gen, const LabeledOperator& f1_t,
                                 double t, int s);

struct EquivalenceResult {
  double residual = 0.0;
  double bound = 0.0;
  double tail_bbgky = 0.0;
  double tail_functional = 0.0;
  double tail_gke = 0.0;
};

/// || F_s(t) - F_s(t | F_1(t)) ||_1 with both sides computed from series.
EquivalenceResult equivalence_residual(const GeneratedEvolution& gen,
                                       const InitialDatum& datum, double t, int s);

}  // namespace qk
