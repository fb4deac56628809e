#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qk::continuum {

using Complex = std::complex<double>;
using Wave = Eigen::VectorXcd;

struct Grid1D {
  double L = 0.0;
  int m = 0;
  double dx = 0.0;
  std::vector<double> k;  // FFT-ordered wavenumbers

  /// Throws unless m is a power of two, m >= 16 and L > 0.
  static Grid1D make(double L, int m);
  double x(int j) const { return j * dx; }
};

/// FFTW plans for one grid. Transforms are unnormalized; `backward`
/// divides by the transform size so backward(forward(v)) = v.
class Spectral {
 public:
  explicit Spectral(int m);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  void forward(Wave& v) const;
  void backward(Wave& v) const;
  /// 2-D transforms of an m x m array stored row-major in a length m^2 vector.
  void forward2(Wave& v) const;
  void backward2(Wave& v) const;

 private:
  int m_;
  void* plans_[4];
};

double mass(const Grid1D& g, const Wave& psi);
/// sum (|grad psi|^2 / 2 + |psi|^4 / 2) dx with a spectral gradient.
double nls_energy(const Grid1D& g, const Spectral& fft, const Wave& psi);
double max_abs(const Wave& psi);

/// psi <- F^-1 exp(-i k^2 tau / 2) F psi.
void kinetic_phase(const Grid1D& g, const Spectral& fft, Wave& psi, double tau);

/// Grid delta of unit mass: 1/dx at the origin.
std::vector<double> delta_potential(const Grid1D& g);

/// One Strang step: half kinetic, exp(-i (V * |psi|^2) dt), half kinetic.
/// V is sampled at x_j and convolved periodically.
Wave hartree_step(const Grid1D& g, const Spectral& fft, const Wave& psi,
                  const std::vector<double>& v, double dt);

struct Sample {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double max_abs_psi = 0.0;
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<double> snapshot_times;
  std::vector<Wave> snapshots;
  double max_step_mass_change = 0.0;
};

/// Hartree evolution on a uniform time grid, one step per grid interval.
/// Snapshots are kept every `snapshot_stride` grid points (0 keeps none).
Trajectory hartree_solve(const Grid1D& g, const Wave& psi0, const std::vector<double>& v,
                         const std::vector<double>& t_grid, int snapshot_stride = 0);
Trajectory nls_solve(const Grid1D& g, const Wave& psi0, const std::vector<double>& t_grid,
                     int snapshot_stride = 0);

/// Discretized pair operator b on l2(grid) x l2(grid), kernel values
/// b(q1,q2; q1',q2') so that (b u)(q1,q2) = sum b(..;q1',q2') u(q1',q2') dx^2.
/// Stored as a * identity + sum_r lambda_r |phi_r><phi_r| (+ optional dense
/// kernel for m <= 32). Pair functions are m x m row-major, index q1 * m + q2,
/// normalized to sum |phi|^2 dx^2 = 1.
struct PairOperator {
  double identity_coeff = 0.0;
  std::vector<std::pair<double, Wave>> projectors;
  std::optional<Eigen::MatrixXcd> dense;  // kernel values, side m^2

  static PairOperator identity(double coeff = 1.0);
  static PairOperator zero();
  /// Adds lambda |phi><phi| after normalizing phi.
  PairOperator& add_projector(const Grid1D& g, double lambda, Wave phi);
};

/// Diagonal pattern b(t; q,q; q',q'') of the freely evolved pair operator
/// prod G_1(-t,i) b prod G_1(t,i).
class CouplingKernel {
 public:
  double t() const { return t_; }
  /// b(t; q,q; q',q'') for grid indices.
  Complex value(int q, int q1, int q2) const;
  /// N(q) = sum_{q',q''} b(t;q,q;q',q'') psi(q'') conj(psi(q)) psi(q') dx^2.
  Wave nonlinearity(const Wave& psi) const;
  /// Full kernel matrix (side m^2); only for m <= 32.
  Eigen::MatrixXcd dense_matrix() const;
  /// sum_{q1,q2} b(t; q1,q2; q1,q2) dx^2.
  Complex trace() const;

 private:
  friend class PairKernel;
  const Grid1D* grid_ = nullptr;
  double t_ = 0.0;
  double identity_coeff_ = 0.0;
  std::vector<std::pair<double, Wave>> projectors_;
  std::optional<Eigen::MatrixXcd> dense_;
};

/// Time-dependent coupling kernel generated by b0. Dense kernels that commute
/// with the free pair Hamiltonian are detected and evaluated once.
class PairKernel {
 public:
  PairKernel(const Grid1D& g, PairOperator b0);

  std::shared_ptr<const CouplingKernel> at(double t) const;
  bool time_invariant() const { return invariant_; }
  const Grid1D& grid() const { return grid_; }

 private:
  Grid1D grid_;
  PairOperator b0_;
  std::unique_ptr<Spectral> fft_;
  std::optional<Eigen::MatrixXcd> dense_hat_;  // b0 dense in momentum space
  std::vector<double> pair_energy_;
  bool invariant_ = false;
  mutable std::mutex mutex_;
  mutable std::shared_ptr<const CouplingKernel> fixed_;
};

std::shared_ptr<const CouplingKernel> coupling_kernel(const PairKernel& b0, double t);
/// Kernel at t / scale.
std::shared_ptr<const CouplingKernel> rescaled_kernel(const PairKernel& b0, double t,
                                                      double scale);

/// Strang splitting with the nonlocal cubic term integrated by explicit
/// midpoint (kernel at t and t + dt/2). The kernel is read at t / scale.
Trajectory gp_solve(const Grid1D& g, const Wave& psi0, const std::vector<double>& t_grid,
                    const PairKernel& kernel, int snapshot_stride = 0, double scale = 1.0);

/// Normalized Gaussian packet exp(-(x-x0)^2 / (4 sigma^2) + i k0 x).
Wave gaussian(const Grid1D& g, double x0, double sigma, double k0);
/// Normalized plane wave exp(i 2 pi n x / L).
Wave plane_wave(const Grid1D& g, int n);

void write_trajectory_csv(const std::string& path, const Trajectory& traj);
/// "QKPSI1", uint64 m, double L, uint64 count, count doubles (t), then
/// count * m (re, im) double pairs.
void write_snapshots(const std::string& path, const Grid1D& g, const Trajectory& traj);
Trajectory read_snapshots(const std::string& path, Grid1D& g);

}  // namespace qk::continuum
