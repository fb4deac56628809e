#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>

#include "meanfield/meanfield.hpp"
#include "test_support.hpp"

using namespace qk;
using namespace qk::test;

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Tr_2 over the second factor of a 4x4 matrix.
Matrix trace_second(const Matrix& m) {
  Matrix out = Matrix::Zero(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) out(i, j) += m(2 * i + k, 2 * j + k);
  return out;
}

// Independent mean-field flow: -i [K + Tr_2 Phi (1 x f), f], classic RK4.
Matrix hartree_reference(const Matrix& k, const Matrix& phi, Matrix f, double t, int steps) {
  auto rhs = [&](const Matrix& x) {
    const Matrix heff = k + trace_second(phi * kron(Matrix::Identity(2, 2), x));
    return Matrix(Complex(0, -1) * (heff * x - x * heff));
  };
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Matrix k1 = rhs(f), k2 = rhs(f + h / 2 * k1), k3 = rhs(f + h / 2 * k2),
                 k4 = rhs(f + h * k3);
    f += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return f;
}

struct Fixture {
  Scenario sc;
  CorrelationFamily corr;
  Dynamics limit;
  explicit Fixture(const std::string& name)
      : sc(load_fixture(name)),
        corr(sc.correlations()),
        limit(HamiltonianSpec{sc.kinetic, sc.potential, 1.0}) {}
  LadderSetup setup(int threads = 1) const {
    LadderSetup s;
    s.spec = limit.spec();
    s.correlations = &corr;
    s.f1_limit = sc.f1_0;
    s.t = 0.5;
    s.n_max = 2;
    s.vlasov_steps = 5;
    s.threads = threads;
    return s;
  }
};

}  // namespace

TEST_CASE("horizon") {
  Fixture fx("a_small_meanfield");
  const double phi = operator_norm(fx.sc.potential.matrix());
  CHECK(horizon_t0(fx.limit, fx.sc.f1_0) ==
        doctest::Approx(1.0 / (2 * phi * trace_norm(fx.sc.f1_0))));
  CHECK(phi == doctest::Approx(0.1));
  const Dynamics free(HamiltonianSpec{fx.sc.kinetic,
                                      LabeledOperator(2, {1, 2}, Matrix::Zero(4, 4)), 1.0});
  CHECK(std::isinf(horizon_t0(free, fx.sc.f1_0)));
}

TEST_CASE("modified Vlasov right-hand side against explicit matrices") {
  Fixture fx("a_large_identities");
  std::mt19937_64 rng(31);
  const LabeledOperator f(2, {1}, random_hermitian(2, rng));
  const Matrix k = fx.sc.kinetic.matrix(), phi = fx.sc.potential.matrix();
  const Matrix g = fx.corr.on({1, 2}).matrix();
  const Matrix k2 = kron(k, Matrix::Identity(2, 2)) + kron(Matrix::Identity(2, 2), k);
  for (double t : {0.0, 0.4}) {
    const Matrix u = expm_taylor(Complex(0, -t) * k2);  // G(-t) x = u x u^dagger
    const Matrix ff = kron(f.matrix(), f.matrix());
    const Matrix inner = u * (g * (u.adjoint() * ff * u)) * u.adjoint();
    const Matrix expect = Complex(0, -1) * (k * f.matrix() - f.matrix() * k) +
                          trace_second(Complex(0, -1) * (phi * inner - inner * phi));
    CHECK(max_abs(vlasov_rhs(fx.limit, fx.corr, t, f).matrix() - expect) < 1e-13);
  }
}

TEST_CASE("chaos: Vlasov reduces to the Hartree flow") {
  Fixture fx("b_chaos_meanfield");
  std::mt19937_64 rng(32);
  const LabeledOperator f(2, {1}, random_hermitian(2, rng));
  CHECK(max_abs(vlasov_rhs(fx.limit, fx.corr, 0.3, f).matrix() -
                hartree_rhs(fx.limit, f).matrix()) < 1e-13);
  const LabeledOperator f0 = Complex(30.0) * fx.sc.f1_0;  // trace norm 0.3
  const auto grid = uniform_grid(1.0, 10);
  const VlasovTrajectory a = vlasov_integrate(fx.limit, fx.corr, f0, grid);
  const VlasovTrajectory b = vlasov_integrate(fx.limit, fx.corr, f0, grid, true);
  const Matrix ref = hartree_reference(fx.sc.kinetic.matrix(), fx.sc.potential.matrix(),
                                       f0.matrix(), 1.0, 4000);
  CHECK(max_abs(a.f1.back().matrix() - ref) < 1e-11);
  CHECK(max_abs(b.f1.back().matrix() - ref) < 1e-11);
  CHECK(a.max_trace_drift < 1e-12);
  CHECK(a.max_hermiticity_defect < 1e-12);
}

TEST_CASE("Gauss-Legendre rule") {
  for (int n : {1, 3, 8}) {
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    REQUIRE(x.size() == std::size_t(n));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double q = 0.0;
      for (int i = 0; i < n; ++i) q += w[std::size_t(i)] * std::pow(x[std::size_t(i)], p);
      const double exact = (p % 2 == 1) ? 0.0 : 2.0 / (p + 1);
      CHECK(q == doctest::Approx(exact).epsilon(1e-13));
    }
  }
}

TEST_CASE("iterated-integral series") {
  Fixture fx("b_chaos_meanfield");
  const LabeledOperator f0 = Complex(30.0) * fx.sc.f1_0;
  const double t0 = horizon_t0(fx.limit, f0);
  const double t = 0.3 * t0;
  const VlasovSeriesResult r = vlasov_series(fx.limit, fx.corr, f0, t, 3);
  const VlasovTrajectory ode = vlasov_integrate(fx.limit, fx.corr, f0, uniform_grid(t, 20));
  CHECK(trace_norm(r.value - ode.f1.back()) <= r.tail + r.quadrature_check + 1e-10);
  for (std::size_t n = 0; n < r.term_norms.size(); ++n)
    CHECK(r.term_norms[n] <= r.term_bounds[n] + 1e-14);
  CHECK(r.t0 == doctest::Approx(t0));
  CHECK_THROWS_WITH_AS(vlasov_series(fx.limit, fx.corr, f0, t0, 2),
                       doctest::Contains("outside convergence horizon"), InvalidArgument);
  CHECK_NOTHROW(vlasov_series(fx.limit, fx.corr, f0, t0 * (1 - 1e-9), 1));
}

TEST_CASE("epsilon ladders: decrease, determinism across thread counts") {
  Fixture fx("a_small_meanfield");
  const std::vector<double> ladder{0.5, 0.25, 0.125, 0.0625};
  const auto one = meanfield_convergence_study(fx.setup(1), ladder);
  const auto three = meanfield_convergence_study(fx.setup(3), ladder);
  REQUIRE(one.size() == 4);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].distance == three[i].distance);
    CHECK(one[i].epsilon == ladder[i]);
    if (i > 0) CHECK(one[i].distance < one[i - 1].distance);
  }
  CHECK(meanfield_convergence_study(fx.setup(), {}).empty());

  const auto prop = correlation_propagation_residual(fx.setup(2), ladder, 2);
  for (std::size_t i = 1; i < prop.size(); ++i) CHECK(prop[i].distance < prop[i - 1].distance);
}

TEST_CASE("generated operators in the mean-field limit") {
  Fixture fx("a_small_meanfield");
  double prev_first = INFINITY, prev_high = INFINITY;
  for (double eps : {0.4, 0.2, 0.1}) {
    const Dynamics dyn(HamiltonianSpec{fx.sc.kinetic, fx.sc.potential, eps});
    const double first = first_order_limit_defect(dyn, fx.corr, 0.5, 2, 3);
    const double high = generated_probe_norm(dyn, fx.corr, 0.5, 2, 1, 3);
    CHECK(first < prev_first);
    CHECK(high < prev_high);
    prev_first = first;
    prev_high = high;
  }
  // One-particle clusters: the higher-order operator vanishes identically.
  const Dynamics dyn(HamiltonianSpec{fx.sc.kinetic, fx.sc.potential, 0.5});
  CHECK(generated_probe_norm(dyn, fx.corr, 0.5, 1, 1, 3) < 1e-15);
}

TEST_CASE("parallel_for visits each index once") {
  std::vector<std::atomic<int>> hits(37);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS(parallel_for(3, 2, [](std::size_t i) {
    if (i == 1) throw std::runtime_error("boom");
  }));
}
