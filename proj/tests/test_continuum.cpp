#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "continuum/continuum.hpp"
#include "hierarchy/hierarchy.hpp"
#include "test_support.hpp"


using namespace qk::continuum;
using qk::continuum::Trajectory;
using qk::uniform_grid;
using qk::test::expm_taylor;
using qk::Complex;

namespace {

const double kPi = std::numbers::pi;

Wave modulated(const Grid1D& g, double a) {
  Wave psi(g.m);
  for (int j = 0; j < g.m; ++j) psi[j] = 1.0 + a * std::cos(2 * kPi * g.x(j) / g.L);
  return psi / std::sqrt(mass(g, psi));
}

double l2(const Grid1D& g, const Wave& a) { return std::sqrt(a.squaredNorm() * g.dx); }

// Free pair Hamiltonian -Lap_1/2 - Lap_2/2 in position space via explicit DFT matrices.
Eigen::MatrixXcd pair_hamiltonian(const Grid1D& g) {
  const int m = g.m;
  Eigen::MatrixXcd f(m, m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) f(k, j) = std::exp(Complex(0, -2 * kPi * j * k / m)) / std::sqrt(double(m));
  Eigen::VectorXcd e(m);
  for (int k = 0; k < m; ++k) e[k] = 0.5 * g.k[std::size_t(k)] * g.k[std::size_t(k)];
  const Eigen::MatrixXcd t = f.adjoint() * e.asDiagonal() * f;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(m, m);
  Eigen::MatrixXcd h(m * m, m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) h(a * m + b, c * m + d) = t(a, c) * id(b, d) + id(a, c) * t(b, d);
  return h;
}

Wave relative_gaussian(const Grid1D& g, double width) {
  Wave phi(g.m * g.m);
  for (int a = 0; a < g.m; ++a)
    for (int b = 0; b < g.m; ++b) {
      double d = g.x(a) - g.x(b);
      d -= g.L * std::round(d / g.L);
      phi[a * g.m + b] = std::exp(-d * d / (4 * width * width)) * std::exp(Complex(0, std::sin(g.x(a))));
    }
  return phi;
}

}  // namespace

TEST_CASE("grid construction") {
  CHECK_THROWS_AS(Grid1D::make(1.0, 12), std::exception);
  CHECK_THROWS_AS(Grid1D::make(1.0, 8), std::exception);
  CHECK_THROWS_AS(Grid1D::make(-1.0, 16), std::exception);
  const Grid1D g = Grid1D::make(2 * kPi, 16);
  CHECK(g.dx == doctest::Approx(2 * kPi / 16));
  CHECK(g.k[1] == doctest::Approx(1.0));
  CHECK(g.k[15] == doctest::Approx(-1.0));
}

TEST_CASE("spectral transforms") {
  const Grid1D g = Grid1D::make(2 * kPi, 32);
  const Spectral fft(32);
  std::mt19937_64 rng(41);
  Wave v = qk::test::random_matrix(32, rng).col(0);
  Wave w = v;
  fft.forward(w);
  fft.backward(w);
  CHECK((w - v).cwiseAbs().maxCoeff() < 1e-14);
  Wave p = plane_wave(g, 3);
  fft.forward(p);
  for (int k = 0; k < 32; ++k)
    if (k != 3) CHECK(std::abs(p[k]) < 1e-12);
  Wave v2 = qk::test::random_matrix(32, rng).reshaped();
  Wave w2 = v2;
  fft.forward2(w2);
  fft.backward2(w2);
  CHECK((w2 - v2).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("plane wave phase is exact to splitting accuracy") {
  const Grid1D g = Grid1D::make(2 * kPi, 32);
  const Wave psi0 = plane_wave(g, 2);
  const auto grid = uniform_grid(1.0, 1000);
  const Trajectory tr = nls_solve(g, psi0, grid, 1000);
  const double rho = 1.0 / g.L, k = 2.0;
  const Wave exact = psi0 * std::exp(Complex(0, -(0.5 * k * k + rho) * 1.0));
  CHECK(l2(g, tr.snapshots.back() - exact) < 1e-8);
  CHECK(tr.max_step_mass_change < 1e-12);
}

TEST_CASE("unitary paths conserve mass; NLS conserves energy to second order") {
  const Grid1D g = Grid1D::make(2 * kPi, 64);
  const Wave psi0 = modulated(g, 0.3);
  const auto coarse = nls_solve(g, psi0, uniform_grid(1.0, 200));
  const auto fine = nls_solve(g, psi0, uniform_grid(1.0, 400));
  auto drift = [](const Trajectory& t) {
    double d = 0.0;
    for (const auto& s : t.samples) d = std::max(d, std::abs(s.energy - t.samples[0].energy));
    return d;
  };
  CHECK(coarse.max_step_mass_change < 1e-12);
  CHECK(drift(fine) < drift(coarse) / 3.0);
  std::vector<double> v(64);
  for (int j = 0; j < 64; ++j) v[std::size_t(j)] = std::exp(-std::pow(std::min(g.x(j), g.L - g.x(j)), 2));
  CHECK(hartree_solve(g, gaussian(g, kPi, 0.5, 1.0), v, uniform_grid(1.0, 100)).max_step_mass_change <
        1e-12);
}

TEST_CASE("Hartree with a grid delta is the cubic equation") {
  const Grid1D g = Grid1D::make(2 * kPi, 32);
  const Wave psi0 = modulated(g, 0.5);
  const auto grid = uniform_grid(0.5, 50);
  const auto a = hartree_solve(g, psi0, delta_potential(g), grid, 50);
  const auto b = nls_solve(g, psi0, grid, 50);
  CHECK(l2(g, a.snapshots.back() - b.snapshots.back()) < 1e-13);
}

TEST_CASE("identity pair kernel gives the cubic nonlinearity") {
  const Grid1D g = Grid1D::make(2 * kPi, 16);
  const PairKernel k(g, PairOperator::identity(2.5));
  CHECK(k.time_invariant());
  const Wave psi = modulated(g, 0.4);
  const Wave n = k.at(0.7)->nonlinearity(psi);
  for (int q = 0; q < g.m; ++q) CHECK(std::abs(n[q] - 2.5 * std::norm(psi[q]) * psi[q]) < 1e-14);
  CHECK(k.at(0.1).get() == k.at(0.9).get());
}

TEST_CASE("delta kernel equation approaches NLS at second order in dt") {
  const Grid1D g = Grid1D::make(2 * kPi, 32);
  const Wave psi0 = modulated(g, 0.5);
  const PairKernel k(g, PairOperator::identity(1.0));
  auto gap = [&](int steps) {
    const auto grid = uniform_grid(0.5, steps);
    return l2(g, gp_solve(g, psi0, grid, k, steps).snapshots.back() -
                     nls_solve(g, psi0, grid, steps).snapshots.back());
  };
  const double ratio = gap(50) / gap(100);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("projector kernels follow the free pair evolution") {
  const Grid1D g = Grid1D::make(2 * kPi, 16);
  auto b0 = PairOperator::zero();
  b0.add_projector(g, 0.7, relative_gaussian(g, 0.6));
  const PairKernel k(g, b0);
  CHECK_FALSE(k.time_invariant());
  const double t = 0.35;
  const Eigen::MatrixXcd u = expm_taylor(Complex(0, -t) * pair_hamiltonian(g));
  const Eigen::MatrixXcd expect = u * k.at(0.0)->dense_matrix() * u.adjoint();
  CHECK((k.at(t)->dense_matrix() - expect).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(k.at(t)->trace() - 0.7) < 1e-12);
  CHECK(std::abs(rescaled_kernel(k, 0.7, 2.0)->value(1, 2, 3) - k.at(0.35)->value(1, 2, 3)) < 1e-15);

  // The same operator given as a dense kernel takes the momentum-space path.
  PairOperator dense = PairOperator::zero();
  dense.dense = k.at(0.0)->dense_matrix();
  const PairKernel kd(g, dense);
  CHECK_FALSE(kd.time_invariant());
  CHECK((kd.at(t)->dense_matrix() - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("dense kernels commuting with the pair Hamiltonian are time invariant") {
  const Grid1D g = Grid1D::make(2 * kPi, 16);
  PairOperator b = PairOperator::zero();
  const Eigen::MatrixXcd h = pair_hamiltonian(g);
  b.dense = h * h;
  const PairKernel k(g, b);
  CHECK(k.time_invariant());
  CHECK((k.at(1.3)->dense_matrix() - h * h).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("trajectory files") {
  const Grid1D g = Grid1D::make(2 * kPi, 16);
  const auto tr = nls_solve(g, modulated(g, 0.2), uniform_grid(0.1, 10), 5);
  REQUIRE(tr.snapshots.size() == 3);
  const auto dir = std::filesystem::temp_directory_path() / "qk_continuum_test";
  std::filesystem::create_directories(dir);
  const std::string bin = (dir / "psi.bin").string(), csv = (dir / "t.csv").string();
  write_snapshots(bin, g, tr);
  Grid1D back;
  const Trajectory r = read_snapshots(bin, back);
  CHECK(back.m == 16);
  CHECK(back.L == g.L);
  REQUIRE(r.snapshots.size() == 3);
  CHECK(r.snapshot_times == tr.snapshot_times);
  CHECK((r.snapshots[2] - tr.snapshots[2]).cwiseAbs().maxCoeff() == 0.0);
  write_trajectory_csv(csv, tr);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,mass,energy,max_abs_psi");
  std::ofstream(bin, std::ios::binary) << "garbage";
  CHECK_THROWS(read_snapshots(bin, back));
  std::filesystem::remove_all(dir);
}
