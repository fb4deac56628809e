#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dynamics/dynamics.hpp"
#include "dynamics/identities.hpp"
#include "test_support.hpp"

using namespace qk;
using namespace qk::test;

namespace {

struct Setup {
  HamiltonianSpec spec;
  Matrix k, phi;
};

Setup make_setup(double eps, std::uint64_t seed = 21) {
  std::mt19937_64 rng(seed);
  Setup s;
  s.k = random_hermitian(2, rng);
  Matrix p = random_hermitian(4, rng);
  p = (p + permute_slots(p, 2, {1, 2}, {2, 1})) / 2.0;
  s.phi = 0.3 * p;
  s.spec = {LabeledOperator(2, {1}, s.k), LabeledOperator(2, {1, 2}, s.phi), eps};
  return s;
}

// H_3 assembled by hand from Kronecker products.
Matrix h3(const Setup& s) {
  const Matrix i2 = Matrix::Identity(2, 2);
  auto kron = [](const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
  };
  const Matrix kin = kron(kron(s.k, i2), i2) + kron(kron(i2, s.k), i2) + kron(kron(i2, i2), s.k);
  const Matrix p12 = kron(s.phi, i2);
  const Matrix p23 = kron(i2, s.phi);
  const Matrix p13 = permute_slots(p12, 2, {1, 3, 2}, {1, 2, 3});
  return kin + s.spec.epsilon * (p12 + p23 + p13);
}

}  // namespace

TEST_CASE("three-particle Hamiltonian matches a hand-built Kronecker sum") {
  const Setup s = make_setup(0.7);
  const Dynamics dyn(s.spec);
  CHECK(max_abs(dyn.hamiltonian(3).matrix() - h3(s)) < 1e-13);
}

TEST_CASE("group action agrees with an independent matrix exponential") {
  const Setup s = make_setup(0.7);
  const Dynamics dyn(s.spec);
  std::mt19937_64 rng(22);
  const LabeledOperator f = random_operator(2, {1, 2, 3}, rng);
  for (double t : {-0.4, 0.25, 1.0})
    CHECK(max_abs(dyn.evolve(t, f).matrix() - conjugate_expm(h3(s), t, f.matrix())) < 1e-11);
}

TEST_CASE("generators are time derivatives of the groups") {
  const Setup s = make_setup(0.5);
  const Dynamics dyn(s.spec);
  std::mt19937_64 rng(23);
  const LabeledOperator f = random_operator(2, {1, 2}, rng);
  const double h = 1e-3;
  const auto at = [&](double t) { return dyn.evolve(t, f).matrix(); };
  const Matrix fd = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
  const Matrix gen = dyn.generator_apply(GeneratorKind::Full, {}, f).matrix();
  CHECK(max_abs(fd - gen) < 1e-7);

  // Interaction generator carries no epsilon: -i [Phi, f].
  const Matrix comm = Complex(0, -1) * (s.phi * f.matrix() - f.matrix() * s.phi);
  CHECK(max_abs(dyn.generator_apply(GeneratorKind::Interaction, {1, 2}, f).matrix() - comm) <
        1e-13);
}

TEST_CASE("low-order cumulants against explicit group combinations") {
  const Setup s = make_setup(1.0);
  const Dynamics dyn(s.spec);
  std::mt19937_64 rng(24);
  const LabeledOperator f = random_operator(2, {1, 2, 3}, rng);
  const double t = 0.6;
  auto G = [&](const Labels& block, const LabeledOperator& x) {
    return dyn.evolve_block(t, block, x);
  };
  // A_2(1,2) on a three-particle operator, particle 3 untouched.
  const LabeledOperator a2 = G({1, 2}, f) - G({1}, G({2}, f));
  CHECK(max_abs(dyn.cumulant_apply(t, ClusteredSet::plain({1, 2}), f).matrix() - a2.matrix()) <
        1e-12);

  const LabeledOperator a3 = G({1, 2, 3}, f) - G({1, 2}, G({3}, f)) - G({1, 3}, G({2}, f)) -
                             G({2, 3}, G({1}, f)) + 2.0 * G({1}, G({2}, G({3}, f)));
  CHECK(max_abs(dyn.cumulant_apply(t, ClusteredSet::plain({1, 2, 3}), f).matrix() -
                a3.matrix()) < 1e-12);

  const LabeledOperator a2c = G({1, 2, 3}, f) - G({1, 2}, G({3}, f));
  CHECK(max_abs(dyn.cumulant_apply(t, ClusteredSet::clustered({1, 2}, {3}), f).matrix() -
                a2c.matrix()) < 1e-12);
}

TEST_CASE("scattering cumulant composes correlation and free flow") {
  const Setup s = make_setup(1.0);
  const Dynamics dyn(s.spec);
  std::mt19937_64 rng(25);
  const LabeledOperator f = random_operator(2, {1, 2}, rng);
  const LabeledOperator g = random_operator(2, {1, 2}, rng);
  const double t = 0.4;
  const ClusteredSet set = ClusteredSet::plain({1, 2});
  const LabeledOperator expect =
      dyn.cumulant_apply(t, set, left_multiply(g, dyn.evolve_free(-t, {1, 2}, f)));
  CHECK(max_abs(dyn.scattering_cumulant_apply(t, set, g, f).matrix() - expect.matrix()) < 1e-13);
}

TEST_CASE("free dynamics has vanishing higher cumulants") {
  Setup s = make_setup(1.0);
  s.spec.potential = LabeledOperator(2, {1, 2}, Matrix::Zero(4, 4));
  const Dynamics dyn(s.spec);
  std::mt19937_64 rng(26);
  const LabeledOperator f = random_operator(2, {1, 2, 3}, rng);
  CHECK(trace_norm(dyn.cumulant_apply(0.8, ClusteredSet::plain({1, 2, 3}), f)) < 1e-13);
  CHECK(trace_norm(dyn.cumulant_apply(0.8, ClusteredSet::clustered({1, 2}, {3}), f)) < 1e-13);
}

TEST_CASE("identity suites on random dynamics") {
  const Setup s = make_setup(0.9);
  const Dynamics dyn(s.spec);
  for (int m = 1; m <= 6; ++m) CHECK(mobius_orthogonality_defect(m) == 0);
  for (int n = 1; n <= 3; ++n)
    CHECK(cumulant_zero_time_residual(dyn, 1, n, probe_operators(2, label_range(1, 1 + n), 3)) <
          1e-12);
  CHECK(cumulant_zero_time_residual(dyn, 2, 0, probe_operators(2, {1, 2}, 3)) < 1e-12);
  for (int sz = 1; sz <= 3; ++sz)
    for (int n = 0; sz + n <= 4; ++n)
      CHECK(cluster_inversion_residual(dyn, sz, n, 0.7,
                                       probe_operators(2, label_range(1, sz + n), 5)) < 1e-10);
  CHECK(round_trip_residual(dyn, 0.9, probe_operators(2, {1, 2}, 6)) < 1e-12);
}

TEST_CASE("helpers embed onto the operand labels") {
  std::mt19937_64 rng(27);
  const LabeledOperator f = random_operator(2, {1, 2}, rng);
  const LabeledOperator u(2, {2}, expm_taylor(Complex(0, -1) * random_hermitian(2, rng)));
  const Matrix full_u = embed(u, {1, 2}).matrix();
  CHECK(max_abs(conjugate_by(u, f).matrix() - full_u * f.matrix() * full_u.adjoint()) < 1e-13);
  CHECK(max_abs(left_multiply(u, f).matrix() - full_u * f.matrix()) < 1e-13);
}

TEST_CASE("Hamiltonian validation") {
  Setup s = make_setup(1.0);
  CHECK_NOTHROW(s.spec.validate());
  HamiltonianSpec bad = s.spec;
  Matrix asym = s.phi;
  asym(0, 1) += 0.1;
  asym(1, 0) += 0.1;
  bad.potential = LabeledOperator(2, {1, 2}, asym);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = s.spec;
  Matrix k = s.k;
  k(0, 1) += Complex(0, 0.5);
  bad.kinetic = LabeledOperator(2, {1}, k);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}
