#include "core/labeled_operator.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace qk {

namespace {

void check_labels(const Labels& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1)
      throw InvalidArgument("particle labels must be positive integers");
    for (std::size_t j = 0; j < i; ++j)
      if (labels[i] == labels[j]) throw InvalidArgument("label collision");
  }
}

// Offset of each basis index of the sub-register `slots` inside the full
// register of `n` slots (slot 0 most significant).
std::vector<Eigen::Index> register_offsets(int dim, std::size_t n,
                                           const std::vector<std::size_t>& slots) {
  const Eigen::Index size = space_size(dim, slots.size());
  std::vector<Eigen::Index> weight(n);
  Eigen::Index w = 1;
  for (std::size_t k = n; k-- > 0;) {
    weight[k] = w;
    w *= dim;
  }
  std::vector<Eigen::Index> out(static_cast<std::size_t>(size), 0);
  for (Eigen::Index idx = 0; idx < size; ++idx) {
    Eigen::Index rest = idx;
    Eigen::Index off = 0;
    for (std::size_t k = slots.size(); k-- > 0;) {
      off += (rest % dim) * weight[slots[k]];
      rest /= dim;
    }
    out[static_cast<std::size_t>(idx)] = off;
  }
  return out;
}

}  // namespace

Eigen::Index space_size(int dim, std::size_t n) {
  Eigen::Index s = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (s > std::numeric_limits<Eigen::Index>::max() / dim)
      throw InvalidArgument("tensor space too large");
    s *= dim;
  }
  return s;
}

LabeledOperator::LabeledOperator(int dim, Labels labels, Matrix matrix)
    : dim_(dim), labels_(std::move(labels)), matrix_(std::move(matrix)) {
  if (dim_ < 1) throw InvalidArgument("one-particle dimension must be >= 1");
  check_labels(labels_);
  const Eigen::Index side = space_size(dim_, labels_.size());
  if (matrix_.rows() != side || matrix_.cols() != side)
    throw InvalidArgument("matrix side must equal dim^|labels|");
  if (!std::is_sorted(labels_.begin(), labels_.end())) {
    Labels sorted = labels_;
    std::sort(sorted.begin(), sorted.end());
    matrix_ = permute_slots(matrix_, dim_, labels_, sorted);
    labels_ = std::move(sorted);
  }
}

LabeledOperator LabeledOperator::scalar(int dim, Complex value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return LabeledOperator(dim, {}, std::move(m));
}

LabeledOperator LabeledOperator::identity(int dim, Labels labels) {
  const Eigen::Index side = space_size(dim, labels.size());
  return LabeledOperator(dim, std::move(labels), Matrix::Identity(side, side));
}

bool LabeledOperator::has_label(int label) const {
  return std::binary_search(labels_.begin(), labels_.end(), label);
}

std::size_t LabeledOperator::slot_of(int label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label)
    throw InvalidArgument("label " + std::to_string(label) + " not present");
  return static_cast<std::size_t>(it - labels_.begin());
}

LabeledOperator LabeledOperator::relabeled(Labels new_labels) const {
  if (new_labels.size() != labels_.size())
    throw InvalidArgument("relabel: arity mismatch");
  if (!std::is_sorted(new_labels.begin(), new_labels.end()))
    throw InvalidArgument("relabel: new labels must be increasing");
  return LabeledOperator(dim_, std::move(new_labels), matrix_);
}

LabeledOperator LabeledOperator::adjoint() const {
  return LabeledOperator(dim_, labels_, matrix_.adjoint());
}

LabeledOperator& LabeledOperator::operator+=(const LabeledOperator& other) {
  if (other.labels_ != labels_ || other.dim_ != dim_)
    throw InvalidArgument("sum of operators on different labels");
  matrix_ += other.matrix_;
  return *this;
}

LabeledOperator& LabeledOperator::operator-=(const LabeledOperator& other) {
  if (other.labels_ != labels_ || other.dim_ != dim_)
    throw InvalidArgument("difference of operators on different labels");
  matrix_ -= other.matrix_;
  return *this;
}

LabeledOperator& LabeledOperator::operator*=(Complex s) {
  matrix_ *= s;
  return *this;
}

LabeledOperator operator+(LabeledOperator a, const LabeledOperator& b) {
  a += b;
  return a;
}

LabeledOperator operator-(LabeledOperator a, const LabeledOperator& b) {
  a -= b;
  return a;
}

LabeledOperator operator*(Complex s, LabeledOperator a) {
  a *= s;
  return a;
}

LabeledOperator compose(const LabeledOperator& a, const LabeledOperator& b) {
  if (a.labels() != b.labels() || a.dim() != b.dim())
    throw InvalidArgument("product of operators on different labels");
  return LabeledOperator(a.dim(), a.labels(), a.matrix() * b.matrix());
}

Matrix permute_slots(const Matrix& m, int dim, const Labels& from,
                     const Labels& to) {
  const std::size_t n = from.size();
  if (to.size() != n) throw InvalidArgument("permute_slots: arity mismatch");
  std::vector<std::size_t> source(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto it = std::find(from.begin(), from.end(), to[k]);
    if (it == from.end())
      throw InvalidArgument("permute_slots: target is not a permutation");
    source[k] = static_cast<std::size_t>(it - from.begin());
  }
  const auto map = register_offsets(dim, n, source);
  const Eigen::Index side = m.rows();
  Matrix out(side, side);
  for (Eigen::Index j = 0; j < side; ++j) {
    const Eigen::Index pj = map[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < side; ++i)
      out(i, j) = m(map[static_cast<std::size_t>(i)], pj);
  }
  return out;
}

LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("tensor: dimension mismatch");
  for (int l : b.labels())
    if (a.has_label(l)) throw InvalidArgument("label collision");
  Labels labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  Matrix k(a.side() * b.side(), a.side() * b.side());
  for (Eigen::Index i = 0; i < a.side(); ++i)
    for (Eigen::Index j = 0; j < a.side(); ++j)
      k.block(i * b.side(), j * b.side(), b.side(), b.side()) =
          a.matrix()(i, j) * b.matrix();
  return LabeledOperator(a.dim(), std::move(labels), std::move(k));
}

LabeledOperator embed(const LabeledOperator& op, const Labels& full_labels) {
  Labels missing;
  for (int l : full_labels)
    if (!op.has_label(l)) missing.push_back(l);
  if (full_labels.size() - missing.size() != op.arity())
    throw InvalidArgument("embed: operator labels not contained in target labels");
  if (missing.empty()) return op;
  return tensor(op, LabeledOperator::identity(op.dim(), missing));
}

LabeledOperator partial_trace(const LabeledOperator& op, const Labels& keep) {
  std::vector<std::size_t> kept, traced;
  for (int l : keep)
    if (!op.has_label(l))
      throw InvalidArgument("partial_trace: kept label " + std::to_string(l) +
                            " not present");
  Labels kept_labels;
  for (std::size_t k = 0; k < op.arity(); ++k) {
    const int l = op.labels()[k];
    if (std::find(keep.begin(), keep.end(), l) != keep.end()) {
      kept.push_back(k);
      kept_labels.push_back(l);
    } else {
      traced.push_back(k);
    }
  }
  const auto off_k = register_offsets(op.dim(), op.arity(), kept);
  const auto off_t = register_offsets(op.dim(), op.arity(), traced);
  const Eigen::Index side = static_cast<Eigen::Index>(off_k.size());
  Matrix out = Matrix::Zero(side, side);
  const Matrix& m = op.matrix();
  for (Eigen::Index b = 0; b < side; ++b)
    for (Eigen::Index a = 0; a < side; ++a) {
      Complex acc = 0.0;
      for (Eigen::Index t : off_t)
        acc += m(off_k[static_cast<std::size_t>(a)] + t,
                 off_k[static_cast<std::size_t>(b)] + t);
      out(a, b) = acc;
    }
  return LabeledOperator(op.dim(), std::move(kept_labels), std::move(out));
}

LabeledOperator trace_out(const LabeledOperator& op, const Labels& traced) {
  for (int l : traced) (void)op.slot_of(l);
  Labels keep;
  for (int l : op.labels())
    if (std::find(traced.begin(), traced.end(), l) == traced.end())
      keep.push_back(l);
  return partial_trace(op, keep);
}

double hermiticity_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return hermiticity_defect(m) <= rel_tol * scale;
}

double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (is_hermitian(m, 1e-14)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
  }
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double trace_norm(const LabeledOperator& op) { return trace_norm(op.matrix()); }

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

namespace {

template <class F>
void for_each_permutation(const Labels& labels, F&& fn) {
  Labels perm = labels;
  std::sort(perm.begin(), perm.end());
  do {
    fn(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

}  // namespace

LabeledOperator symmetrize(const LabeledOperator& op) {
  Matrix acc = Matrix::Zero(op.side(), op.side());
  std::size_t count = 0;
  for_each_permutation(op.labels(), [&](const Labels& perm) {
    acc += permute_slots(op.matrix(), op.dim(), op.labels(), perm);
    ++count;
  });
  acc /= static_cast<double>(count);
  return LabeledOperator(op.dim(), op.labels(), std::move(acc));
}

PermutationSymmetryReport symmetry_report(const LabeledOperator& op) {
  PermutationSymmetryReport report;
  for_each_permutation(op.labels(), [&](const Labels& perm) {
    const Matrix p = permute_slots(op.matrix(), op.dim(), op.labels(), perm);
    report.max_deviation =
        std::max(report.max_deviation, trace_norm(Matrix(p - op.matrix())));
  });
  return report;
}

Propagator::Propagator(const LabeledOperator& h)
    : dim_(h.dim()), labels_(h.labels()) {
  if (!is_hermitian(h.matrix()))
    throw InvalidArgument("propagator: Hamiltonian is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h.matrix() + h.matrix().adjoint()));
  if (es.info() != Eigen::Success)
    throw NumericError("propagator: eigendecomposition failed");
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
}

Matrix Propagator::unitary(double t) const {
  if (t == 0.0)
    return Matrix::Identity(eigenvectors_.rows(), eigenvectors_.cols());
  Vector phases(eigenvalues_.size());
  for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k)
    phases(k) = std::exp(Complex(0.0, -t * eigenvalues_(k)));
  return eigenvectors_ * phases.asDiagonal() * eigenvectors_.adjoint();
}

LabeledOperator Propagator::unitary_operator(double t) const {
  return LabeledOperator(dim_, labels_, unitary(t));
}

LabeledOperator Propagator::conjugate(double t, const LabeledOperator& f) const {
  if (f.labels() != labels_)
    throw InvalidArgument("propagator: label mismatch");
  const Matrix u = unitary(t);
  return LabeledOperator(dim_, labels_, u * f.matrix() * u.adjoint());
}

}  // namespace qk
