#include "hierarchy/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace qk {

namespace {

std::string radius_warning(const char* where, double norm, const char* radius_name,
                           double radius) {
  std::ostringstream os;
  os.precision(6);
  os << where << ": trace norm " << norm << " >= " << radius_name << " = " << radius
     << "; convergence of the series is not guaranteed";
  return os.str();
}

LabeledOperator zeros_like(int dim, const Labels& labels) {
  const Eigen::Index side = space_size(dim, labels.size());
  return LabeledOperator(dim, labels, Matrix::Zero(side, side));
}

}  // namespace

void InitialDatum::validate() const {
  if (f1_0.arity() != 1) throw InvalidArgument("f1_0 must act on one particle");
  if (f1_0.dim() != correlations.dim())
    throw InvalidArgument("f1_0 dimension differs from the correlation family");
  if (!is_hermitian(f1_0.matrix())) throw InvalidArgument("f1_0 is not Hermitian");
  const double scale = std::max(1.0, trace_norm(f1_0));
  if (min_eigenvalue(f1_0) < -kHermitianTolerance * scale)
    throw InvalidArgument("f1_0 is not positive");
}

double tail_estimate(const std::vector<double>& a) {
  if (a.size() < 2) return 0.0;
  const double last = a.back();
  const double prev = a[a.size() - 2];
  if (last <= 0.0) return 0.0;
  double r = prev > 0.0 ? last / prev : 0.9;
  r = std::clamp(r, 0.0, 0.9);
  return last * r / (1.0 - r);
}

double bbgky_radius() { return std::exp(-1.0); }
double collision_radius() { return std::exp(-8.0); }
double gke_radius() { return std::exp(-10.0) / (1.0 + std::exp(-9.0)); }
double functional_radius(int s) { return std::exp(-(3.0 * s + 2.0)); }

double min_eigenvalue(const LabeledOperator& op) {
  const Matrix h = 0.5 * (op.matrix() + op.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

LabeledOperator product_state(const LabeledOperator& f1, const Labels& labels) {
  LabeledOperator out = LabeledOperator::scalar(f1.dim(), 1.0);
  for (int l : labels) out = tensor(out, f1.relabeled({l}));
  return out;
}

std::vector<LabeledOperator> initial_marginals(const InitialDatum& datum, int s_max) {
  if (s_max < 1) throw InvalidArgument("s_max must be >= 1");
  std::vector<LabeledOperator> out;
  for (int s = 1; s <= s_max; ++s) {
    if (!datum.correlations.has(s))
      throw InvalidArgument("missing g_" + std::to_string(s) + " for s_max = " +
                            std::to_string(s_max));
    const Labels y = label_range(1, s);
    out.push_back(left_multiply(datum.correlations.on(y), product_state(datum.f1_0, y)));
  }
  return out;
}

SeriesResult bbgky_series(const Dynamics& dyn, const InitialDatum& datum, double t, int s,
                          int n_max) {
  if (s < 1) throw InvalidArgument("bbgky_series: s must be >= 1");
  if (n_max < 0) throw InvalidArgument("bbgky_series: n_max must be >= 0");
  SeriesResult r;
  const Labels y = label_range(1, s);
  r.value = zeros_like(dyn.dim(), y);
  const double norm0 = trace_norm(datum.f1_0);
  if (norm0 >= bbgky_radius())
    r.warnings.push_back(radius_warning("bbgky_series", norm0, "e^-1", bbgky_radius()));
  for (int n = 0; n <= n_max; ++n) {
    const Labels all = label_range(1, s + n);
    const Labels added = label_range(s + 1, s + n);
    const LabeledOperator f0 =
        left_multiply(datum.correlations.on(all), product_state(datum.f1_0, all));
    const LabeledOperator evolved =
        dyn.cumulant_apply(t, ClusteredSet::clustered(y, added), f0);
    LabeledOperator term = partial_trace(evolved, y);
    term *= 1.0 / static_cast<double>(factorial(n));
    r.term_norms.push_back(trace_norm(term));
    r.value += term;
  }
  r.tail = tail_estimate(r.term_norms);
  return r;
}

SeriesResult collision_integral(const GeneratedEvolution& gen, const LabeledOperator& f1_t,
                                double t) {
  const Dynamics& dyn = gen.dynamics();
  SeriesResult r;
  r.value = zeros_like(dyn.dim(), {1});
  const double norm = trace_norm(f1_t);
  if (norm >= collision_radius())
    r.warnings.push_back(
        radius_warning("collision_integral", norm, "e^-8", collision_radius()));
  const Labels pair{1, 2};
  for (int n = 0; n <= gen.n_max(); ++n) {
    const Labels all = label_range(1, n + 2);
    const Labels added = label_range(3, n + 2);
    const LabeledOperator g =
        gen.apply_generated(t, pair, added, product_state(f1_t.relabeled({1}), all));
    const LabeledOperator f2 = partial_trace(g, pair);
    LabeledOperator term =
        partial_trace(dyn.generator_apply(GeneratorKind::Interaction, pair, f2), {1});
    term *= dyn.epsilon() / static_cast<double>(factorial(n));
    r.term_norms.push_back(trace_norm(term));
    r.value += term;
  }
  r.tail = tail_estimate(r.term_norms);
  return r;
}

LabeledOperator gke_rhs(const GeneratedEvolution& gen, const LabeledOperator& f1_t,
                        double t) {
  LabeledOperator out = gen.dynamics().generator_apply(GeneratorKind::Free, {1}, f1_t);
  out += collision_integral(gen, f1_t, t).value;
  return out;
}

SeriesResult gke_series(const Dynamics& dyn, const InitialDatum& datum, double t,
                        int n_max) {
  SeriesResult r = bbgky_series(dyn, datum, t, 1, n_max);
  const double norm0 = trace_norm(datum.f1_0);
  if (norm0 >= gke_radius())
    r.warnings.push_back(
        radius_warning("gke_series", norm0, "e^-10 (1+e^-9)^-1", gke_radius()));
  return r;
}

std::vector<double> uniform_grid(double t_end, int steps) {
  if (steps < 1) throw InvalidArgument("time grid needs at least one step");
  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) grid[static_cast<std::size_t>(k)] = t_end * k / steps;
  return grid;
}

int rk4_substeps(double interval, double rhs_norm, double h_max) {
  double h = std::abs(interval);
  if (h == 0.0) return 1;
  if (rhs_norm > 0.0) h = std::min(h, std::pow(1e-10 / rhs_norm, 0.25));
  h = std::min(h, h_max);
  return std::max(1, static_cast<int>(std::ceil(std::abs(interval) / h - 1e-12)));
}

namespace {

void check_uniform(const std::vector<double>& grid) {
  if (grid.size() < 2) throw InvalidArgument("time grid needs at least two points");
  const double h = grid[1] - grid[0];
  if (!(h > 0.0)) throw InvalidArgument("time grid must be increasing");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (std::abs(grid[k] - grid[k - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw InvalidArgument("time grid must be uniform");
}

template <typename Rhs>
LabeledOperator rk4_step(const Rhs& rhs, double t, double h, const LabeledOperator& y) {
  const LabeledOperator k1 = rhs(t, y);
  const LabeledOperator k2 = rhs(t + h / 2, y + (h / 2) * k1);
  const LabeledOperator k3 = rhs(t + h / 2, y + (h / 2) * k2);
  const LabeledOperator k4 = rhs(t + h, y + h * k3);
  return y + (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory gke_integrate(const GeneratedEvolution& gen, const InitialDatum& datum,
                         const std::vector<double>& t_grid,
                         std::optional<double> defect_budget) {
  check_uniform(t_grid);
  const Dynamics& dyn = gen.dynamics();
  auto rhs = [&](double t, const LabeledOperator& f) { return gke_rhs(gen, f, t); };

  Trajectory traj;
  const double interval = t_grid[1] - t_grid[0];
  traj.substeps = rk4_substeps(interval, trace_norm(rhs(t_grid[0], datum.f1_0)), 0.01);
  const double h = interval / traj.substeps;

  LabeledOperator f = datum.f1_0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    if (k > 0)
      for (int j = 0; j < traj.substeps; ++j) f = rk4_step(rhs, t_grid[k - 1] + j * h, h, f);
    const SeriesResult series = gke_series(dyn, datum, t, gen.n_max());
    if (k == 0) traj.warnings = series.warnings;
    TrajectoryPoint p;
    p.t = t;
    p.f1 = f;
    p.trace = f.trace().real();
    p.trace_norm = trace_norm(f);
    p.min_eig = min_eigenvalue(f);
    p.defect = trace_norm(f - series.value);
    p.tail = series.tail;
    if (defect_budget && p.defect > *defect_budget + p.tail) {
      std::ostringstream os;
      os << "gke_integrate: defect " << p.defect << " at t = " << t << " exceeds budget "
         << *defect_budget << " + tail " << p.tail << " (substeps " << traj.substeps
         << ", h = " << h << "); reduce the step";
      throw NumericError(os.str());
    }
    traj.points.push_back(std::move(p));
  }
  return traj;
}

SeriesResult marginal_functional(const GeneratedEvolution& gen, const LabeledOperator& f1_t,
                                 double t, int s) {
  if (s < 1) throw InvalidArgument("marginal_functional: s must be >= 1");
  const Dynamics& dyn = gen.dynamics();
  SeriesResult r;
  const Labels y = label_range(1, s);
  r.value = zeros_like(dyn.dim(), y);
  const double norm = trace_norm(f1_t);
  if (norm >= functional_radius(s))
    r.warnings.push_back(radius_warning("marginal_functional", norm,
                                        ("e^-" + std::to_string(3 * s + 2)).c_str(),
                                        functional_radius(s)));
  for (int n = 0; n <= gen.n_max(); ++n) {
    const Labels all = label_range(1, s + n);
    const Labels added = label_range(s + 1, s + n);
    const LabeledOperator g =
        gen.apply_generated(t, y, added, product_state(f1_t.relabeled({1}), all));
    LabeledOperator term = partial_trace(g, y);
    term *= 1.0 / static_cast<double>(factorial(n));
    r.term_norms.push_back(trace_norm(term));
    r.value += term;
  }
  r.tail = tail_estimate(r.term_norms);
  return r;
}

EquivalenceResult equivalence_residual(const GeneratedEvolution& gen,
                                       const InitialDatum& datum, double t, int s) {
  if (s < 2) throw InvalidArgument("equivalence_residual: s must be >= 2");
  const Dynamics& dyn = gen.dynamics();
  const SeriesResult direct = bbgky_series(dyn, datum, t, s, gen.n_max());
  const SeriesResult f1 = gke_series(dyn, datum, t, gen.n_max());
  const SeriesResult functional = marginal_functional(gen, f1.value, t, s);
  EquivalenceResult r;
  r.residual = trace_norm(direct.value - functional.value);
  r.tail_bbgky = direct.tail;
  r.tail_functional = functional.tail;
  r.tail_gke = f1.tail;
  const double g_norm = operator_norm(datum.correlations.g(s).matrix());
  r.bound = r.tail_bbgky + r.tail_functional +
            g_norm * s * std::pow(trace_norm(f1.value), s - 1) * r.tail_gke;
  return r;
}

}  // namespace qk
