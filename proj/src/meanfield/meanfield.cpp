#include "meanfield/meanfield.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include <Eigen/Eigenvalues>

#include "dynamics/expansion.hpp"

namespace qk {

double horizon_t0(const Dynamics& dyn, const LabeledOperator& f1_0) {
  const double denom =
      2.0 * operator_norm(dyn.spec().potential.matrix()) * trace_norm(f1_0);
  return denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
}

namespace {

// Tr_{k+1} sum_{i<=k} (-N_int(i, k+1)) x, x on labels 1..k+1.
LabeledOperator collision_level(const Dynamics& dyn, const LabeledOperator& x) {
  const int k = static_cast<int>(x.arity()) - 1;
  const Labels keep = label_range(1, k);
  LabeledOperator acc(x.dim(), x.labels(), Matrix::Zero(x.side(), x.side()));
  for (int i = 1; i <= k; ++i)
    acc += dyn.generator_apply(GeneratorKind::Interaction, {i, k + 1}, x);
  return partial_trace(acc, keep);
}

}  // namespace

LabeledOperator vlasov_rhs(const Dynamics& dyn, const CorrelationFamily& corr, double t,
                           const LabeledOperator& f1) {
  const LabeledOperator f = f1.relabeled({1});
  const Labels pair{1, 2};
  LabeledOperator ff = product_state(f, pair);
  ff = dyn.evolve_free(t, pair, left_multiply(corr.on(pair), dyn.evolve_free(-t, pair, ff)));
  LabeledOperator out = dyn.generator_apply(GeneratorKind::Free, {1}, f);
  out += collision_level(dyn, ff);
  return out;
}

LabeledOperator hartree_rhs(const Dynamics& dyn, const LabeledOperator& f1) {
  const Matrix& k = dyn.spec().kinetic.matrix();
  const Matrix& phi = dyn.spec().potential.matrix();
  const Eigen::Index d = k.rows();
  // Mean-field potential V_{ab} = sum_{c,e} Phi_{(a c),(b e)} f_{e c}.
  Matrix v = Matrix::Zero(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      for (Eigen::Index c = 0; c < d; ++c)
        for (Eigen::Index e = 0; e < d; ++e) v(a, b) += phi(a * d + c, b * d + e) * f1.matrix()(e, c);
  const Matrix h = k + v;
  const Matrix& f = f1.matrix();
  return LabeledOperator(f1.dim(), {1}, Complex(0.0, -1.0) * (h * f - f * h));
}

VlasovTrajectory vlasov_integrate(const Dynamics& dyn, const CorrelationFamily& corr,
                                  const LabeledOperator& f1_0,
                                  const std::vector<double>& t_grid, bool correlation_free) {
  if (t_grid.size() < 2) throw InvalidArgument("time grid needs at least two points");
  const double interval = t_grid[1] - t_grid[0];
  if (!(interval > 0.0)) throw InvalidArgument("time grid must be increasing");
  auto rhs = [&](double t, const LabeledOperator& f) {
    return correlation_free ? hartree_rhs(dyn, f) : vlasov_rhs(dyn, corr, t, f);
  };
  VlasovTrajectory traj;
  traj.substeps = rk4_substeps(interval, trace_norm(rhs(t_grid[0], f1_0)), 0.01);
  const double h = interval / traj.substeps;
  const double trace0 = f1_0.trace().real();
  LabeledOperator f = f1_0.relabeled({1});
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (k > 0) {
      if (std::abs(t_grid[k] - t_grid[k - 1] - interval) > 1e-9 * std::max(1.0, interval))
        throw InvalidArgument("time grid must be uniform");
      for (int j = 0; j < traj.substeps; ++j) {
        const double t = t_grid[k - 1] + j * h;
        const LabeledOperator k1 = rhs(t, f);
        const LabeledOperator k2 = rhs(t + h / 2, f + (h / 2) * k1);
        const LabeledOperator k3 = rhs(t + h / 2, f + (h / 2) * k2);
        const LabeledOperator k4 = rhs(t + h, f + h * k3);
        f += (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      if (!f.matrix().allFinite()) throw NumericError("vlasov_integrate: non-finite state");
    }
    traj.t.push_back(t_grid[k]);
    traj.f1.push_back(f);
    traj.max_trace_drift = std::max(traj.max_trace_drift, std::abs(f.trace().real() - trace0));
    traj.max_hermiticity_defect =
        std::max(traj.max_hermiticity_defect, (f.matrix() - f.matrix().adjoint()).norm());
  }
  return traj;
}

void gauss_legendre(int nodes, std::vector<double>& x, std::vector<double>& w) {
  if (nodes < 1) throw InvalidArgument("gauss_legendre: nodes must be >= 1");
  // Golub-Welsch: eigenvalues of the Jacobi matrix of the Legendre recurrence.
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    j(k, k - 1) = b;
    j(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  x.resize(static_cast<std::size_t>(nodes));
  w.resize(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) {
    x[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    const double v = es.eigenvectors()(0, k);
    w[static_cast<std::size_t>(k)] = 2.0 * v * v;
  }
}

namespace {

struct SimplexQuadrature {
  const Dynamics& dyn;
  LabeledOperator x0;  // g_{n+1} prod f on labels 1..n+1
  int n;
  std::vector<double> x, w;

  // I(k, upper) = int_0^upper G^k(-(upper - tau)) W_k(tau) dtau for k <= n,
  // and G^{n+1}(-upper) x0 for k = n + 1.
  LabeledOperator level(int k, double upper) const {
    const Labels labels = label_range(1, k);
    if (k == n + 1) return dyn.evolve_free(upper, labels, x0);
    LabeledOperator acc(x0.dim(), labels,
                        Matrix::Zero(space_size(x0.dim(), labels.size()),
                                     space_size(x0.dim(), labels.size())));
    if (upper == 0.0) return acc;
    for (std::size_t q = 0; q < x.size(); ++q) {
      const double tau = 0.5 * upper * (x[q] + 1.0);
      const LabeledOperator inner = collision_level(dyn, level(k + 1, tau));
      acc += (0.5 * upper * w[q]) * dyn.evolve_free(upper - tau, labels, inner);
    }
    return acc;
  }
};

LabeledOperator vlasov_term(const Dynamics& dyn, const CorrelationFamily& corr,
                            const LabeledOperator& f, double t, int n, int nodes) {
  const Labels all = label_range(1, n + 1);
  SimplexQuadrature q{dyn, left_multiply(corr.on(all), product_state(f, all)), n, {}, {}};
  gauss_legendre(nodes, q.x, q.w);
  return q.level(1, t);
}

}  // namespace

VlasovSeriesResult vlasov_series(const Dynamics& dyn, const CorrelationFamily& corr,
                                 const LabeledOperator& f1_0, double t, int n_max,
                                 int nodes) {
  if (n_max < 0) throw InvalidArgument("vlasov_series: n_max must be >= 0");
  VlasovSeriesResult r;
  r.t0 = horizon_t0(dyn, f1_0);
  if (std::abs(t) >= r.t0)
    throw InvalidArgument("outside convergence horizon: |t| = " + std::to_string(std::abs(t)) +
                          " >= t0 = " + std::to_string(r.t0));
  const LabeledOperator f = f1_0.relabeled({1});
  r.value = dyn.evolve_free(t, {1}, f);
  r.term_norms.push_back(trace_norm(r.value));
  r.term_bounds.push_back(trace_norm(f));
  const double ratio = std::isinf(r.t0) ? 0.0 : std::abs(t) / r.t0;
  LabeledOperator fine = r.value;
  for (int n = 1; n <= n_max; ++n) {
    const LabeledOperator term = vlasov_term(dyn, corr, f, t, n, nodes);
    fine += vlasov_term(dyn, corr, f, t, n, 2 * nodes);
    r.value += term;
    r.term_norms.push_back(trace_norm(term));
    r.term_bounds.push_back(std::pow(ratio, n) * trace_norm(f) *
                            operator_norm(corr.g(n + 1).matrix()));
  }
  r.tail = tail_estimate(r.term_norms);
  r.quadrature_check = trace_norm(fine - r.value);
  return r;
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

LabeledOperator vlasov_at(const Dynamics& dyn, const CorrelationFamily& corr,
                          const LabeledOperator& f1, double t, int steps) {
  if (t == 0.0) return f1.relabeled({1});
  return vlasov_integrate(dyn, corr, f1, uniform_grid(t, std::max(1, steps))).f1.back();
}

Dynamics dynamics_at(HamiltonianSpec spec, double eps) {
  spec.epsilon = eps;
  return Dynamics(std::move(spec));
}

}  // namespace

std::vector<LadderRow> meanfield_convergence_study(const LadderSetup& setup,
                                                   const std::vector<double>& ladder) {
  if (!setup.correlations) throw InvalidArgument("ladder setup needs correlations");
  const CorrelationFamily& corr = *setup.correlations;
  const Dynamics limit = dynamics_at(setup.spec, 1.0);
  const LabeledOperator f_t = vlasov_at(limit, corr, setup.f1_limit, setup.t, setup.vlasov_steps);
  std::vector<LadderRow> rows(ladder.size());
  parallel_for(ladder.size(), setup.threads, [&](std::size_t i) {
    const auto start = Clock::now();
    const double eps = ladder[i];
    const Dynamics dyn = dynamics_at(setup.spec, eps);
    const InitialDatum datum{(1.0 / eps) * setup.f1_limit.relabeled({1}), corr};
    const SeriesResult f = gke_series(dyn, datum, setup.t, setup.n_max);
    rows[i] = {eps, setup.t, trace_norm(eps * f.value - f_t), eps * f.tail, elapsed_ms(start)};
  });
  return rows;
}

LabeledOperator propagated_correlation_limit(const Dynamics& dyn,
                                             const CorrelationFamily& corr, double t,
                                             const LabeledOperator& f1, int s) {
  const Labels y = label_range(1, s);
  const LabeledOperator prod = product_state(f1.relabeled({1}), y);
  return dyn.evolve_free(t, y, left_multiply(corr.on(y), dyn.evolve_free(-t, y, prod)));
}

std::vector<LadderRow> correlation_propagation_residual(const LadderSetup& setup,
                                                        const std::vector<double>& ladder,
                                                        int s) {
  if (s < 2) throw InvalidArgument("correlation_propagation_residual: s must be >= 2");
  if (!setup.correlations) throw InvalidArgument("ladder setup needs correlations");
  const CorrelationFamily& corr = *setup.correlations;
  const Dynamics limit = dynamics_at(setup.spec, 1.0);
  const LabeledOperator f_t = vlasov_at(limit, corr, setup.f1_limit, setup.t, setup.vlasov_steps);
  const LabeledOperator target = propagated_correlation_limit(limit, corr, setup.t, f_t, s);
  const double g_norm = operator_norm(corr.g(s).matrix());
  std::vector<LadderRow> rows(ladder.size());
  parallel_for(ladder.size(), setup.threads, [&](std::size_t i) {
    const auto start = Clock::now();
    const double eps = ladder[i];
    const Dynamics dyn = dynamics_at(setup.spec, eps);
    const InitialDatum datum{(1.0 / eps) * setup.f1_limit.relabeled({1}), corr};
    const SeriesResult f1 = gke_series(dyn, datum, setup.t, setup.n_max);
    const GeneratedEvolution gen(dyn, corr, setup.n_max);
    const SeriesResult fs = marginal_functional(gen, f1.value, setup.t, s);
    const double scale = std::pow(eps, s);
    const double tail =
        scale * (fs.tail + g_norm * s * std::pow(trace_norm(f1.value), s - 1) * f1.tail);
    rows[i] = {eps, setup.t, trace_norm(scale * fs.value - target), tail, elapsed_ms(start)};
  });
  return rows;
}

double first_order_limit_defect(const Dynamics& dyn, const CorrelationFamily& corr,
                                double t, int s, std::uint64_t seed) {
  const Labels y = label_range(1, s);
  const GeneratedEvolution gen(dyn, corr, 0);
  double worst = 0.0;
  for (const auto& f : probe_operators(dyn.dim(), y, seed)) {
    const LabeledOperator exact = gen.apply_generated(t, y, {}, f);
    const LabeledOperator limit =
        dyn.evolve_free(t, y, left_multiply(corr.on(y), dyn.evolve_free(-t, y, f)));
    worst = std::max(worst, trace_norm(exact - limit));
  }
  return worst;
}

double generated_probe_norm(const Dynamics& dyn, const CorrelationFamily& corr, double t,
                            int s, int n, std::uint64_t seed) {
  const Labels y = label_range(1, s);
  const Labels added = label_range(s + 1, s + n);
  const GeneratedEvolution gen(dyn, corr, n);
  double worst = 0.0;
  for (const auto& f : probe_operators(dyn.dim(), label_range(1, s + n), seed))
    worst = std::max(worst, trace_norm(gen.apply_generated(t, y, added, f)));
  return worst;
}

}  // namespace qk
