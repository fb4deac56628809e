#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qk {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Labels = std::vector<int>;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// Relative tolerance used for Hermiticity checks.
inline constexpr double kHermitianTolerance = 1e-10;

/// Dense operator on H^{\otimes n} whose tensor slots carry particle labels.
///
/// Slots are stored in strictly increasing label order; slot 0 is the most
/// significant digit of the row/column index (Kronecker convention). Passing
/// unsorted labels to the constructor reorders the matrix into that order.
class LabeledOperator {
 public:
  LabeledOperator() = default;
  LabeledOperator(int dim, Labels labels, Matrix matrix);

  /// 1x1 operator with no labels, holding a scalar.
  static LabeledOperator scalar(int dim, Complex value);
  static LabeledOperator identity(int dim, Labels labels);

  int dim() const { return dim_; }
  const Labels& labels() const { return labels_; }
  const Matrix& matrix() const { return matrix_; }
  std::size_t arity() const { return labels_.size(); }
  Eigen::Index side() const { return matrix_.rows(); }

  bool has_label(int label) const;
  /// Slot index of `label`; throws if absent.
  std::size_t slot_of(int label) const;

  /// Same matrix, slots renamed in order (new labels must be increasing).
  LabeledOperator relabeled(Labels new_labels) const;

  Complex trace() const { return matrix_.trace(); }
  LabeledOperator adjoint() const;

  LabeledOperator& operator+=(const LabeledOperator& other);
  LabeledOperator& operator-=(const LabeledOperator& other);
  LabeledOperator& operator*=(Complex s);

 private:
  int dim_ = 1;
  Labels labels_;
  Matrix matrix_ = Matrix::Identity(1, 1);
};

LabeledOperator operator+(LabeledOperator a, const LabeledOperator& b);
LabeledOperator operator-(LabeledOperator a, const LabeledOperator& b);
LabeledOperator operator*(Complex s, LabeledOperator a);
/// Operator product; both operands must act on the same labels.
LabeledOperator compose(const LabeledOperator& a, const LabeledOperator& b);

/// Integer power dim^n with overflow guard.
Eigen::Index space_size(int dim, std::size_t n);

/// Reorder tensor slots: `from` lists the current slot labels, `to` is a
/// permutation of it giving the desired slot order.
Matrix permute_slots(const Matrix& m, int dim, const Labels& from,
                     const Labels& to);

LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b);
LabeledOperator embed(const LabeledOperator& op, const Labels& full_labels);
LabeledOperator partial_trace(const LabeledOperator& op, const Labels& keep);
/// Trace over the listed labels only.
LabeledOperator trace_out(const LabeledOperator& op, const Labels& traced);

double trace_norm(const LabeledOperator& op);
double trace_norm(const Matrix& m);
double operator_norm(const Matrix& m);

bool is_hermitian(const Matrix& m, double rel_tol = kHermitianTolerance);
double hermiticity_defect(const Matrix& m);

struct PermutationSymmetryReport {
  double max_deviation = 0.0;
};

LabeledOperator symmetrize(const LabeledOperator& op);
PermutationSymmetryReport symmetry_report(const LabeledOperator& op);

/// exp(-i t h) from a cached Hermitian eigendecomposition.
class Propagator {
 public:
  explicit Propagator(const LabeledOperator& h);

  const Labels& labels() const { return labels_; }
  int dim() const { return dim_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

  Matrix unitary(double t) const;
  LabeledOperator unitary_operator(double t) const;
  /// f -> U(t) f U(t)^dagger
  LabeledOperator conjugate(double t, const LabeledOperator& f) const;

 private:
  int dim_;
  Labels labels_;
  Eigen::VectorXd eigenvalues_;
  Matrix eigenvectors_;
};

}  // namespace qk
