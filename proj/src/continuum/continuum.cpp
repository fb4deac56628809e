#include "continuum/continuum.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>

#include <fftw3.h>

#include "core/labeled_operator.hpp"

namespace qk::continuum {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Wave& v) { return reinterpret_cast<fftw_complex*>(v.data()); }

void require_finite(const Wave& psi, const char* where) {
  if (!psi.allFinite()) throw NumericError(std::string(where) + ": non-finite wave function");
}

}  // namespace

Grid1D Grid1D::make(double L, int m) {
  if (!(L > 0.0)) throw InvalidArgument("grid length must be positive");
  if (m < 16 || (m & (m - 1)) != 0)
    throw InvalidArgument("grid size must be a power of two and at least 16");
  Grid1D g;
  g.L = L;
  g.m = m;
  g.dx = L / m;
  g.k.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const int n = j < m / 2 ? j : j - m;
    g.k[static_cast<std::size_t>(j)] = 2.0 * std::numbers::pi * n / L;
  }
  return g;
}

Spectral::Spectral(int m) : m_(m) {
  std::lock_guard lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  Wave buf1(m), buf2(static_cast<Eigen::Index>(m) * m);
  plans_[0] = fftw_plan_dft_1d(m, as_fftw(buf1), as_fftw(buf1), FFTW_FORWARD, flags);
  plans_[1] = fftw_plan_dft_1d(m, as_fftw(buf1), as_fftw(buf1), FFTW_BACKWARD, flags);
  plans_[2] = fftw_plan_dft_2d(m, m, as_fftw(buf2), as_fftw(buf2), FFTW_FORWARD, flags);
  plans_[3] = fftw_plan_dft_2d(m, m, as_fftw(buf2), as_fftw(buf2), FFTW_BACKWARD, flags);
}

Spectral::~Spectral() {
  std::lock_guard lock(planner_mutex());
  for (void* p : plans_) fftw_destroy_plan(static_cast<fftw_plan>(p));
}

void Spectral::forward(Wave& v) const {
  fftw_execute_dft(static_cast<fftw_plan>(plans_[0]), as_fftw(v), as_fftw(v));
}

void Spectral::backward(Wave& v) const {
  fftw_execute_dft(static_cast<fftw_plan>(plans_[1]), as_fftw(v), as_fftw(v));
  v /= static_cast<double>(m_);
}

void Spectral::forward2(Wave& v) const {
  fftw_execute_dft(static_cast<fftw_plan>(plans_[2]), as_fftw(v), as_fftw(v));
}

void Spectral::backward2(Wave& v) const {
  fftw_execute_dft(static_cast<fftw_plan>(plans_[3]), as_fftw(v), as_fftw(v));
  v /= static_cast<double>(m_) * m_;
}

double mass(const Grid1D& g, const Wave& psi) { return psi.squaredNorm() * g.dx; }

double max_abs(const Wave& psi) { return psi.size() ? psi.cwiseAbs().maxCoeff() : 0.0; }

double nls_energy(const Grid1D& g, const Spectral& fft, const Wave& psi) {
  Wave grad = psi;
  fft.forward(grad);
  for (int j = 0; j < g.m; ++j) grad[j] *= Complex(0.0, g.k[static_cast<std::size_t>(j)]);
  fft.backward(grad);
  double e = 0.0;
  for (int j = 0; j < g.m; ++j) {
    const double rho = std::norm(psi[j]);
    e += 0.5 * std::norm(grad[j]) + 0.5 * rho * rho;
  }
  return e * g.dx;
}

void kinetic_phase(const Grid1D& g, const Spectral& fft, Wave& psi, double tau) {
  fft.forward(psi);
  for (int j = 0; j < g.m; ++j) {
    const double k = g.k[static_cast<std::size_t>(j)];
    psi[j] *= std::exp(Complex(0.0, -0.5 * k * k * tau));
  }
  fft.backward(psi);
}

std::vector<double> delta_potential(const Grid1D& g) {
  std::vector<double> v(static_cast<std::size_t>(g.m), 0.0);
  v[0] = 1.0 / g.dx;
  return v;
}

Wave hartree_step(const Grid1D& g, const Spectral& fft, const Wave& psi,
                  const std::vector<double>& v, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (static_cast<int>(v.size()) != g.m) throw InvalidArgument("potential size differs from grid");
  Wave out = psi;
  kinetic_phase(g, fft, out, dt / 2);
  Wave rho = out.cwiseAbs2().cast<Complex>();
  Wave vhat(g.m);
  for (int j = 0; j < g.m; ++j) vhat[j] = v[static_cast<std::size_t>(j)];
  fft.forward(rho);
  fft.forward(vhat);
  Wave conv = rho.cwiseProduct(vhat);
  fft.backward(conv);
  for (int j = 0; j < g.m; ++j) out[j] *= std::exp(Complex(0.0, -conv[j].real() * g.dx * dt));
  kinetic_phase(g, fft, out, dt / 2);
  require_finite(out, "hartree_step");
  return out;
}

namespace {

double uniform_step(const std::vector<double>& t_grid) {
  if (t_grid.size() < 2) throw InvalidArgument("time grid needs at least two points");
  const double dt = t_grid[1] - t_grid[0];
  if (!(dt > 0.0)) throw InvalidArgument("time grid must be increasing");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (std::abs(t_grid[k] - t_grid[k - 1] - dt) > 1e-9 * std::max(1.0, dt))
      throw InvalidArgument("time grid must be uniform");
  return dt;
}

template <typename Step>
Trajectory run(const Grid1D& g, const Spectral& fft, const Wave& psi0,
               const std::vector<double>& t_grid, int stride, const Step& step) {
  if (psi0.size() != g.m) throw InvalidArgument("initial wave function size differs from grid");
  const double dt = uniform_step(t_grid);
  Trajectory traj;
  Wave psi = psi0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (k > 0) {
      const double before = mass(g, psi);
      psi = step(psi, t_grid[k - 1], dt);
      traj.max_step_mass_change = std::max(traj.max_step_mass_change, std::abs(mass(g, psi) - before));
    }
    traj.samples.push_back({t_grid[k], mass(g, psi), nls_energy(g, fft, psi), max_abs(psi)});
    if (stride > 0 && (k % static_cast<std::size_t>(stride) == 0 || k + 1 == t_grid.size())) {
      traj.snapshot_times.push_back(t_grid[k]);
      traj.snapshots.push_back(psi);
    }
  }
  return traj;
}

}  // namespace

Trajectory hartree_solve(const Grid1D& g, const Wave& psi0, const std::vector<double>& v,
                         const std::vector<double>& t_grid, int snapshot_stride) {
  const Spectral fft(g.m);
  return run(g, fft, psi0, t_grid, snapshot_stride, [&](const Wave& psi, double, double dt) {
    return hartree_step(g, fft, psi, v, dt);
  });
}

Trajectory nls_solve(const Grid1D& g, const Wave& psi0, const std::vector<double>& t_grid,
                     int snapshot_stride) {
  const Spectral fft(g.m);
  return run(g, fft, psi0, t_grid, snapshot_stride, [&](const Wave& psi, double, double dt) {
    Wave out = psi;
    kinetic_phase(g, fft, out, dt / 2);
    for (int j = 0; j < g.m; ++j) out[j] *= std::exp(Complex(0.0, -std::norm(out[j]) * dt));
    kinetic_phase(g, fft, out, dt / 2);
    require_finite(out, "nls_solve");
    return out;
  });
}

PairOperator PairOperator::identity(double coeff) {
  PairOperator b;
  b.identity_coeff = coeff;
  return b;
}

PairOperator PairOperator::zero() { return PairOperator{}; }

PairOperator& PairOperator::add_projector(const Grid1D& g, double lambda, Wave phi) {
  const Eigen::Index side = static_cast<Eigen::Index>(g.m) * g.m;
  if (phi.size() != side) throw InvalidArgument("pair function size must be m^2");
  const double norm = std::sqrt(phi.squaredNorm()) * g.dx;
  if (!(norm > 0.0)) throw InvalidArgument("pair function must be nonzero");
  phi /= norm;
  projectors.emplace_back(lambda, std::move(phi));
  return *this;
}

Complex CouplingKernel::value(int q, int q1, int q2) const {
  const int m = grid_->m;
  Complex v = 0.0;
  if (q == q1 && q == q2) v += identity_coeff_ / (grid_->dx * grid_->dx);
  for (const auto& [lambda, phi] : projectors_)
    v += lambda * phi[q * m + q] * std::conj(phi[q1 * m + q2]);
  if (dense_) v += (*dense_)(q * m + q, q1 * m + q2);
  return v;
}

Wave CouplingKernel::nonlinearity(const Wave& psi) const {
  const int m = grid_->m;
  const double dx2 = grid_->dx * grid_->dx;
  Wave n = Wave::Zero(m);
  if (identity_coeff_ != 0.0)
    for (int q = 0; q < m; ++q) n[q] += identity_coeff_ * std::norm(psi[q]) * psi[q];
  for (const auto& [lambda, phi] : projectors_) {
    Complex overlap = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) overlap += std::conj(phi[a * m + b]) * psi[a] * psi[b];
    overlap *= dx2;
    for (int q = 0; q < m; ++q) n[q] += lambda * phi[q * m + q] * std::conj(psi[q]) * overlap;
  }
  if (dense_) {
    for (int q = 0; q < m; ++q) {
      Complex acc = 0.0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) acc += (*dense_)(q * m + q, a * m + b) * psi[a] * psi[b];
      n[q] += acc * dx2 * std::conj(psi[q]);
    }
  }
  return n;
}

Eigen::MatrixXcd CouplingKernel::dense_matrix() const {
  const int m = grid_->m;
  if (m > 32) throw InvalidArgument("dense kernel matrices are limited to m <= 32");
  const Eigen::Index side = static_cast<Eigen::Index>(m) * m;
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Identity(side, side) *
                       (identity_coeff_ / (grid_->dx * grid_->dx));
  for (const auto& [lambda, phi] : projectors_) b += lambda * phi * phi.adjoint();
  if (dense_) b += *dense_;
  return b;
}

Complex CouplingKernel::trace() const {
  const double dx2 = grid_->dx * grid_->dx;
  Complex tr = identity_coeff_ * static_cast<double>(grid_->m) * grid_->m;
  for (const auto& [lambda, phi] : projectors_) tr += lambda * phi.squaredNorm() * dx2;
  if (dense_) tr += dense_->trace() * dx2;
  return tr;
}

namespace {

// u <- F u with the unitary 2-D DFT, on every column.
void columns_forward(const Spectral& fft, Eigen::MatrixXcd& a, int m) {
  Wave col(a.rows());
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    col = a.col(c);
    fft.forward2(col);
    a.col(c) = col / static_cast<double>(m);
  }
}

void columns_backward(const Spectral& fft, Eigen::MatrixXcd& a, int m) {
  Wave col(a.rows());
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    col = a.col(c);
    fft.backward2(col);
    a.col(c) = col * static_cast<double>(m);
  }
}

// F b F^dagger. The DFT matrix is symmetric, so b F^dagger = (F b^dagger)^dagger.
Eigen::MatrixXcd to_momentum(const Spectral& fft, Eigen::MatrixXcd b, int m) {
  columns_forward(fft, b, m);
  Eigen::MatrixXcd bt = b.adjoint();
  columns_forward(fft, bt, m);
  return bt.adjoint();
}

Eigen::MatrixXcd to_position(const Spectral& fft, Eigen::MatrixXcd b, int m) {
  columns_backward(fft, b, m);
  Eigen::MatrixXcd bt = b.adjoint();
  columns_backward(fft, bt, m);
  return bt.adjoint();
}

}  // namespace

PairKernel::PairKernel(const Grid1D& g, PairOperator b0)
    : grid_(g), b0_(std::move(b0)), fft_(std::make_unique<Spectral>(g.m)) {
  const int m = g.m;
  const Eigen::Index side = static_cast<Eigen::Index>(m) * m;
  pair_energy_.resize(static_cast<std::size_t>(side));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const double ka = g.k[static_cast<std::size_t>(a)], kb = g.k[static_cast<std::size_t>(b)];
      pair_energy_[static_cast<std::size_t>(a * m + b)] = 0.5 * (ka * ka + kb * kb);
    }
  for (const auto& [lambda, phi] : b0_.projectors)
    if (phi.size() != side) throw InvalidArgument("pair function size must be m^2");
  invariant_ = b0_.projectors.empty();
  if (b0_.dense) {
    if (m > 32) throw InvalidArgument("dense pair kernels are limited to m <= 32");
    if (b0_.dense->rows() != side || b0_.dense->cols() != side)
      throw InvalidArgument("dense pair kernel must have side m^2");
    dense_hat_ = to_momentum(*fft_, *b0_.dense, m);
    const double scale = std::max(1.0, dense_hat_->cwiseAbs().maxCoeff());
    double off = 0.0;
    for (Eigen::Index i = 0; i < side; ++i)
      for (Eigen::Index j = 0; j < side; ++j)
        if (std::abs(pair_energy_[static_cast<std::size_t>(i)] -
                     pair_energy_[static_cast<std::size_t>(j)]) > 1e-9)
          off = std::max(off, std::abs((*dense_hat_)(i, j)));
    invariant_ = invariant_ && off <= 1e-12 * scale;
  }
}

std::shared_ptr<const CouplingKernel> PairKernel::at(double t) const {
  if (invariant_) {
    std::lock_guard lock(mutex_);
    if (fixed_) return fixed_;
  }
  auto k = std::make_shared<CouplingKernel>();
  k->grid_ = &grid_;
  k->t_ = invariant_ ? 0.0 : t;
  k->identity_coeff_ = b0_.identity_coeff;
  const int m = grid_.m;
  for (const auto& [lambda, phi] : b0_.projectors) {
    Wave p = phi;
    fft_->forward2(p);
    for (Eigen::Index i = 0; i < p.size(); ++i)
      p[i] *= std::exp(Complex(0.0, -t * pair_energy_[static_cast<std::size_t>(i)]));
    fft_->backward2(p);
    k->projectors_.emplace_back(lambda, std::move(p));
  }
  if (dense_hat_) {
    if (invariant_) {
      k->dense_ = *b0_.dense;
    } else {
      Eigen::MatrixXcd bhat = *dense_hat_;
      const Eigen::Index side = bhat.rows();
      for (Eigen::Index i = 0; i < side; ++i)
        for (Eigen::Index j = 0; j < side; ++j)
          bhat(i, j) *= std::exp(Complex(0.0, -t * (pair_energy_[static_cast<std::size_t>(i)] -
                                                    pair_energy_[static_cast<std::size_t>(j)])));
      k->dense_ = to_position(*fft_, std::move(bhat), m);
    }
  }
  if (invariant_) {
    std::lock_guard lock(mutex_);
    if (!fixed_) fixed_ = k;
    return fixed_;
  }
  return k;
}

std::shared_ptr<const CouplingKernel> coupling_kernel(const PairKernel& b0, double t) {
  return b0.at(t);
}

std::shared_ptr<const CouplingKernel> rescaled_kernel(const PairKernel& b0, double t,
                                                      double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("scale must be positive");
  return b0.at(t / scale);
}

Trajectory gp_solve(const Grid1D& g, const Wave& psi0, const std::vector<double>& t_grid,
                    const PairKernel& kernel, int snapshot_stride, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("scale must be positive");
  if (kernel.grid().m != g.m || kernel.grid().L != g.L)
    throw InvalidArgument("kernel grid differs from solver grid");
  const Spectral fft(g.m);
  const Complex minus_i(0.0, -1.0);
  return run(g, fft, psi0, t_grid, snapshot_stride, [&](const Wave& psi, double t, double dt) {
    Wave out = psi;
    kinetic_phase(g, fft, out, dt / 2);
    const Wave half = out + (0.5 * dt) * minus_i * rescaled_kernel(kernel, t, scale)->nonlinearity(out);
    out += dt * minus_i * rescaled_kernel(kernel, t + dt / 2, scale)->nonlinearity(half);
    kinetic_phase(g, fft, out, dt / 2);
    require_finite(out, "gp_solve");
    return out;
  });
}

Wave gaussian(const Grid1D& g, double x0, double sigma, double k0) {
  Wave psi(g.m);
  for (int j = 0; j < g.m; ++j) {
    double d = g.x(j) - x0;
    d -= g.L * std::round(d / g.L);
    psi[j] = std::exp(Complex(-d * d / (4.0 * sigma * sigma), k0 * g.x(j)));
  }
  return psi / std::sqrt(mass(g, psi));
}

Wave plane_wave(const Grid1D& g, int n) {
  Wave psi(g.m);
  for (int j = 0; j < g.m; ++j)
    psi[j] = std::exp(Complex(0.0, 2.0 * std::numbers::pi * n * g.x(j) / g.L));
  return psi / std::sqrt(mass(g, psi));
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "t,mass,energy,max_abs_psi\n" << std::setprecision(17);
  for (const auto& s : traj.samples)
    out << s.t << ',' << s.mass << ',' << s.energy << ',' << s.max_abs_psi << '\n';
}

namespace {

constexpr char kMagic[6] = {'Q', 'K', 'P', 'S', 'I', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("truncated snapshot file");
  return v;
}

}  // namespace

void write_snapshots(const std::string& path, const Grid1D& g, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(g.m));
  put<double>(out, g.L);
  put<std::uint64_t>(out, traj.snapshots.size());
  for (double t : traj.snapshot_times) put<double>(out, t);
  for (const Wave& psi : traj.snapshots)
    for (int j = 0; j < g.m; ++j) {
      put<double>(out, psi[j].real());
      put<double>(out, psi[j].imag());
    }
}

Trajectory read_snapshots(const std::string& path, Grid1D& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("not a snapshot file: " + path);
  const auto m = get<std::uint64_t>(in);
  const double L = get<double>(in);
  g = Grid1D::make(L, static_cast<int>(m));
  const auto count = get<std::uint64_t>(in);
  Trajectory traj;
  for (std::uint64_t i = 0; i < count; ++i) traj.snapshot_times.push_back(get<double>(in));
  for (std::uint64_t i = 0; i < count; ++i) {
    Wave psi(static_cast<Eigen::Index>(m));
    for (std::uint64_t j = 0; j < m; ++j) {
      const double re = get<double>(in);
      const double im = get<double>(in);
      psi[static_cast<Eigen::Index>(j)] = Complex(re, im);
    }
    traj.snapshots.push_back(std::move(psi));
  }
  return traj;
}

}  // namespace qk::continuum
