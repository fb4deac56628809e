#include "dynamics/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

namespace qk {

namespace {

std::string join(const Labels& l) {
  std::ostringstream os;
  for (std::size_t i = 0; i < l.size(); ++i) os << (i ? "," : "") << l[i];
  return os.str();
}

// Increasing k-subsets of {0..n-1}.
std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > n) return out;
  std::vector<std::size_t> c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = i;
  while (true) {
    out.push_back(c);
    std::size_t i = k;
    while (i-- > 0) {
      if (c[i] != i + n - k) break;
    }
    if (i == static_cast<std::size_t>(-1) || k == 0) break;
    ++c[i];
    for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

// Ordered k-tuples of distinct elements of {0..n-1}.
std::vector<std::vector<std::size_t>> injections(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  for (auto c : combinations(n, k)) {
    do {
      out.push_back(c);
    } while (std::next_permutation(c.begin(), c.end()));
  }
  return out;
}

double block_weight(const Dissection& d) {
  double w = 1.0;
  for (const auto& b : d) w /= static_cast<double>(factorial(static_cast<int>(b.size())));
  return w;
}

Labels slice(const Labels& l, std::size_t from, std::size_t to) {
  return Labels(l.begin() + static_cast<std::ptrdiff_t>(from),
                l.begin() + static_cast<std::ptrdiff_t>(to));
}

Labels concat(const Labels& a, const Labels& b) {
  Labels out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Expansion build_generated(const Labels& cluster, const Labels& added) {
  const std::size_t n = added.size();
  Expansion e;
  e.terms.push_back({1.0, {ScatteringFactor{cluster, added}}});
  for (std::size_t n1 = 1; n1 <= n; ++n1) {
    const std::size_t m = n - n1;
    const Labels lower_added = slice(added, 0, m);
    const Labels z = slice(added, m, n);
    const Labels pool = concat(cluster, lower_added);
    const Expansion lower = generated_expansion(cluster, lower_added);
    const double base = static_cast<double>(factorial(static_cast<int>(n))) /
                        static_cast<double>(factorial(static_cast<int>(m)));
    for (const Dissection& d : dissections(z, pool.size())) {
      const double w = base * block_weight(d);
      for (const auto& idx : combinations(pool.size(), d.size())) {
        std::vector<ScatteringFactor> tail;
        for (std::size_t k = 0; k < d.size(); ++k)
          tail.push_back({{pool[idx[k]]}, d[k]});
        for (const auto& term : lower.terms) {
          ExpansionTerm t{-w * term.coefficient, term.factors};
          t.factors.insert(t.factors.end(), tail.begin(), tail.end());
          e.terms.push_back(std::move(t));
        }
      }
    }
  }
  e.normalize();
  return e;
}

}  // namespace

std::string ScatteringFactor::to_string() const {
  std::ostringstream os;
  os << 'A' << (1 + added.size()) << '(';
  if (cluster.size() == 1)
    os << cluster.front();
  else
    os << '{' << join(cluster) << '}';
  if (!added.empty()) os << ';' << join(added);
  os << ')';
  return os.str();
}

Expansion& Expansion::normalize() {
  std::map<std::vector<ScatteringFactor>, double> merged;
  for (auto& t : terms) merged[t.factors] += t.coefficient;
  terms.clear();
  for (auto& [factors, c] : merged)
    if (c != 0.0) terms.push_back({c, factors});
  return *this;
}

std::string Expansion::dump() const {
  std::ostringstream os;
  for (const auto& t : terms) {
    os << (t.coefficient >= 0 ? "+" : "") << t.coefficient << ' ';
    for (std::size_t k = 0; k < t.factors.size(); ++k)
      os << (k ? " " : "") << t.factors[k].to_string();
    os << '\n';
  }
  return os.str();
}

bool Expansion::same_terms(const Expansion& other, double tol) const {
  Expansion a = *this, b = other;
  a.normalize();
  b.normalize();
  if (a.terms.size() != b.terms.size()) return false;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    if (a.terms[i].factors != b.terms[i].factors) return false;
    if (std::abs(a.terms[i].coefficient - b.terms[i].coefficient) > tol) return false;
  }
  return true;
}

Expansion generated_expansion(const Labels& cluster, const Labels& added) {
  static std::mutex mutex;
  static std::map<std::pair<Labels, Labels>, Expansion> cache;
  const auto key = std::make_pair(cluster, added);
  {
    std::lock_guard lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  Expansion e = build_generated(cluster, added);
  std::lock_guard lock(mutex);
  return cache.emplace(key, std::move(e)).first->second;
}

Expansion closed_form_expansion(const Labels& cluster, const Labels& added) {
  const std::size_t n = added.size();
  const double nfact = static_cast<double>(factorial(static_cast<int>(n)));
  using Weighted = std::pair<double, std::vector<ScatteringFactor>>;
  Expansion e;
  for (const Composition& comp : compositions(static_cast<int>(n), static_cast<int>(n))) {
    const std::size_t k = comp.size();
    std::vector<std::size_t> prefix(k + 1, n);
    for (std::size_t j = 1; j <= k; ++j)
      prefix[j] = prefix[j - 1] - static_cast<std::size_t>(comp[j - 1]);
    const std::size_t rem = prefix[k];
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double coef = nfact * sign / static_cast<double>(factorial(static_cast<int>(rem)));

    // groups[j-1] holds the weighted dissection sum attached to Z_j.
    std::vector<std::vector<Weighted>> groups;
    for (std::size_t j = 1; j <= k; ++j) {
      const Labels z = slice(added, prefix[j], prefix[j - 1]);
      const Labels pool = concat(cluster, slice(added, 0, prefix[j]));
      std::vector<Weighted> group;
      for (const Dissection& d : dissections(z, pool.size())) {
        const double w = block_weight(d) /
                         static_cast<double>(factorial(static_cast<int>(d.size())));
        for (const auto& idx : injections(pool.size(), d.size())) {
          std::vector<ScatteringFactor> fs;
          for (std::size_t b = 0; b < d.size(); ++b) fs.push_back({{pool[idx[b]]}, d[b]});
          group.push_back({w, std::move(fs)});
        }
      }
      groups.push_back(std::move(group));
    }

    // Product lead ∘ group_k ∘ ... ∘ group_1, so Z_1 (the last labels) acts first.
    std::vector<Weighted> partial{{coef, {ScatteringFactor{cluster, slice(added, 0, rem)}}}};
    for (std::size_t j = k; j-- > 0;) {
      std::vector<Weighted> next;
      for (const auto& [w0, f0] : partial)
        for (const auto& [w1, f1] : groups[j]) {
          auto fs = f0;
          fs.insert(fs.end(), f1.begin(), f1.end());
          next.push_back({w0 * w1, std::move(fs)});
        }
      partial = std::move(next);
    }
    for (auto& [w, fs] : partial) e.terms.push_back({w, std::move(fs)});
  }
  e.normalize();
  return e;
}

GeneratedEvolution::GeneratedEvolution(const Dynamics& dynamics,
                                       const CorrelationFamily& correlations, int n_max)
    : dyn_(dynamics), corr_(correlations), n_max_(n_max) {
  if (n_max_ < 0 || n_max_ > kMaxSupportedOrder)
    throw InvalidArgument("order not supported: n_max must be in [0, 3]");
}

void GeneratedEvolution::check_order(std::size_t n) const {
  if (static_cast<int>(n) > n_max_)
    throw InvalidArgument("order not supported: generated evolution of order 1+" +
                          std::to_string(n) + " exceeds n_max = " +
                          std::to_string(n_max_));
}

LabeledOperator GeneratedEvolution::scattering(double t, const ScatteringFactor& factor,
                                               const LabeledOperator& f) const {
  const ClusteredSet set = factor.ground_set();
  return dyn_.scattering_cumulant_apply(t, set, corr_.cluster(set), f);
}

LabeledOperator GeneratedEvolution::apply(double t, const Expansion& e,
                                          const LabeledOperator& f) const {
  LabeledOperator acc(f.dim(), f.labels(), Matrix::Zero(f.side(), f.side()));
  // Terms often share trailing factors; reuse those partial products.
  std::map<std::vector<ScatteringFactor>, LabeledOperator> suffix;
  for (const auto& term : e.terms) {
    LabeledOperator x = f;
    std::vector<ScatteringFactor> key;
    for (std::size_t k = term.factors.size(); k-- > 0;) {
      key.insert(key.begin(), term.factors[k]);
      auto it = suffix.find(key);
      if (it != suffix.end()) {
        x = it->second;
        continue;
      }
      x = scattering(t, term.factors[k], x);
      suffix.emplace(key, x);
    }
    acc += term.coefficient * x;
  }
  return acc;
}

LabeledOperator GeneratedEvolution::apply_generated(double t, const Labels& cluster,
                                                    const Labels& added,
                                                    const LabeledOperator& f) const {
  check_order(added.size());
  return apply(t, generated_expansion(cluster, added), f);
}

LabeledOperator GeneratedEvolution::apply_closed_form(double t, const Labels& cluster,
                                                      const Labels& added,
                                                      const LabeledOperator& f) const {
  check_order(added.size());
  return apply(t, closed_form_expansion(cluster, added), f);
}

LabeledOperator GeneratedEvolution::kce_rhs(double t, const Labels& cluster,
                                            const Labels& added,
                                            const LabeledOperator& f) const {
  check_order(added.size());
  const std::size_t n = added.size();
  LabeledOperator acc(f.dim(), f.labels(), Matrix::Zero(f.side(), f.side()));
  for (std::size_t n1 = 0; n1 <= n; ++n1) {
    const std::size_t m = n - n1;
    const Labels lower_added = slice(added, 0, m);
    const Labels z = slice(added, m, n);
    const Labels pool = concat(cluster, lower_added);
    LabeledOperator inner(f.dim(), f.labels(), Matrix::Zero(f.side(), f.side()));
    for (const Dissection& d : dissections(z, pool.size())) {
      const double w = block_weight(d);
      for (const auto& idx : combinations(pool.size(), d.size())) {
        LabeledOperator x = f;
        for (std::size_t k = 0; k < d.size(); ++k)
          x = scattering(t, ScatteringFactor{{pool[idx[k]]}, d[k]}, x);
        inner += w * x;
      }
    }
    const double base = static_cast<double>(factorial(static_cast<int>(n))) /
                        static_cast<double>(factorial(static_cast<int>(m)));
    acc += base * apply(t, generated_expansion(cluster, lower_added), inner);
  }
  return acc;
}

double GeneratedEvolution::kce_residual(double t, std::size_t s, std::size_t n,
                                        const std::vector<LabeledOperator>& probes) const {
  check_order(n);
  const Labels cluster = label_range(1, static_cast<int>(s));
  const Labels added = label_range(static_cast<int>(s) + 1, static_cast<int>(s + n));
  const ScatteringFactor lhs{cluster, added};
  double worst = 0.0;
  for (const auto& f : probes) {
    const LabeledOperator diff = scattering(t, lhs, f) - kce_rhs(t, cluster, added, f);
    worst = std::max(worst, trace_norm(diff));
  }
  return worst;
}

Labels label_range(int first, int last) {
  Labels l;
  for (int k = first; k <= last; ++k) l.push_back(k);
  return l;
}

std::vector<LabeledOperator> probe_operators(int dim, const Labels& labels,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::Index side = space_size(dim, labels.size());
  std::vector<LabeledOperator> out;
  for (int k = 0; k < 8; ++k) {
    Matrix a(side, side);
    for (Eigen::Index j = 0; j < side; ++j)
      for (Eigen::Index i = 0; i < side; ++i) a(i, j) = Complex(normal(rng), normal(rng));
    Matrix h = 0.5 * (a + a.adjoint());
    h /= h.norm();
    out.emplace_back(dim, labels, std::move(h));
  }
  if (side <= 8) {
    for (Eigen::Index i = 0; i < side; ++i)
      for (Eigen::Index j = 0; j < side; ++j) {
        Matrix e = Matrix::Zero(side, side);
        e(i, j) = 1.0;
        out.emplace_back(dim, labels, std::move(e));
      }
  }
  return out;
}

}  // namespace qk
