#include "comb/cluster_comb.hpp"

#include <memory>
#include <mutex>
#include <sstream>

namespace qk {

ClusteredSet ClusteredSet::clustered(Labels cluster, const Labels& singles) {
  ClusteredSet s;
  s.has_cluster = true;
  s.elements.push_back(std::move(cluster));
  for (int l : singles) s.elements.push_back({l});
  return s;
}

ClusteredSet ClusteredSet::plain(const Labels& singles) {
  ClusteredSet s;
  for (int l : singles) s.elements.push_back({l});
  return s;
}

std::string ClusteredSet::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (i) os << ',';
    if (i == 0 && has_cluster) {
      os << "{";
      for (std::size_t k = 0; k < elements[i].size(); ++k)
        os << (k ? "," : "") << elements[i][k];
      os << "}";
    } else {
      os << elements[i].front();
    }
  }
  os << ')';
  return os.str();
}

namespace {

std::vector<Partition> enumerate_partitions(std::size_t n) {
  std::vector<Partition> out;
  if (n == 0) {
    out.push_back(Partition{});
    return out;
  }
  // Restricted growth strings: a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
  std::vector<std::size_t> a(n, 0), maxes(n, 0);
  while (true) {
    std::size_t blocks = 0;
    for (std::size_t v : a) blocks = std::max(blocks, v + 1);
    Partition p;
    p.blocks.resize(blocks);
    for (std::size_t i = 0; i < n; ++i) p.blocks[a[i]].push_back(i);
    out.push_back(std::move(p));

    std::size_t i = n;
    while (i-- > 1) {
      if (a[i] <= maxes[i - 1]) break;
    }
    if (i == 0) break;
    ++a[i];
    maxes[i] = std::max(maxes[i - 1], a[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      a[j] = 0;
      maxes[j] = maxes[i];
    }
  }
  return out;
}

}  // namespace

const std::vector<Partition>& set_partitions(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<const std::vector<Partition>>> cache;
  if (n > 10) throw InvalidArgument("set_partitions: ground set too large");
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot)
    slot = std::make_unique<const std::vector<Partition>>(enumerate_partitions(n));
  return *slot;
}

std::vector<Partition> partitions(const ClusteredSet& s) {
  if (s.empty()) throw InvalidArgument("partitions: empty ground set");
  return set_partitions(s.size());
}

long long factorial(int n) {
  long long f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

long long bell_number(int n) {
  return static_cast<long long>(set_partitions(static_cast<std::size_t>(n)).size());
}

long long mobius_coefficient(std::size_t block_count) {
  if (block_count == 0) throw InvalidArgument("partition without blocks");
  const long long mag = factorial(static_cast<int>(block_count) - 1);
  return (block_count % 2 == 1) ? mag : -mag;
}

Labels declusterize(const ClusteredSet& s) {
  Labels out;
  for (const auto& e : s.elements) out.insert(out.end(), e.begin(), e.end());
  return out;
}

Labels declusterize(const ClusteredSet& s, const std::vector<std::size_t>& block) {
  Labels out;
  for (std::size_t idx : block) {
    const auto& e = s.elements.at(idx);
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

std::string to_string(const Partition& p, const ClusteredSet& s) {
  std::ostringstream os;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    if (b) os << '|';
    os << '{';
    for (std::size_t k = 0; k < p.blocks[b].size(); ++k) {
      const std::size_t idx = p.blocks[b][k];
      if (k) os << ',';
      if (idx == 0 && s.has_cluster)
        os << 'Y';
      else
        os << s.elements[idx].front();
    }
    os << '}';
  }
  return os.str();
}

std::vector<Dissection> dissections(const Labels& z, std::size_t max_blocks) {
  if (max_blocks < 1) throw InvalidArgument("dissections: max_blocks must be >= 1");
  std::vector<Dissection> out;
  for (const Partition& p : set_partitions(z.size())) {
    if (p.size() > max_blocks) continue;
    Dissection d;
    for (const auto& block : p.blocks) {
      Labels b;
      for (std::size_t idx : block) b.push_back(z[idx]);
      d.push_back(std::move(b));
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Composition> compositions(int n, int k_max) {
  if (n < 0) throw InvalidArgument("compositions: n must be >= 0");
  std::vector<Composition> out;
  out.push_back({});
  std::vector<Composition> layer{{}};
  for (int k = 1; k <= k_max; ++k) {
    std::vector<Composition> next;
    for (const auto& c : layer) {
      int used = 0;
      for (int p : c) used += p;
      for (int part = 1; used + part <= n; ++part) {
        Composition e = c;
        e.push_back(part);
        next.push_back(std::move(e));
      }
    }
    if (next.empty()) break;
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

LabeledOperator partition_product_sum(const std::map<int, LabeledOperator>& connected,
                                      int dim, const Labels& labels) {
  const Eigen::Index side = space_size(dim, labels.size());
  LabeledOperator acc(dim, labels, Matrix::Zero(side, side));
  for (const Partition& p : set_partitions(labels.size())) {
    LabeledOperator term = LabeledOperator::scalar(dim, 1.0);
    bool vanishes = false;
    for (const auto& block : p.blocks) {
      Labels bl;
      for (std::size_t idx : block) bl.push_back(labels[idx]);
      std::sort(bl.begin(), bl.end());
      if (bl.size() == 1) {
        term = tensor(term, LabeledOperator::identity(dim, bl));
        continue;
      }
      auto it = connected.find(static_cast<int>(bl.size()));
      if (it == connected.end()) {
        vanishes = true;
        break;
      }
      term = tensor(term, it->second.relabeled(bl));
    }
    if (!vanishes) acc += term;
  }
  return acc;
}

std::map<int, LabeledOperator> mobius_invert(const std::map<int, LabeledOperator>& g,
                                            int dim) {
  std::map<int, LabeledOperator> connected;
  for (const auto& [n, gn] : g) {
    if (n < 2) continue;
    Labels labels(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) labels[static_cast<std::size_t>(k)] = k + 1;
    if (gn.labels() != labels)
      throw InvalidArgument("mobius_invert: g_n must act on labels 1..n");
    for (int m = 2; m < n; ++m)
      if (!connected.count(m))
        throw InvalidArgument("mobius_invert: family has a gap below order " +
                              std::to_string(n));
    // Every partition except the one-block partition uses only lower orders.
    const LabeledOperator lower = partition_product_sum(connected, dim, labels);
    connected.emplace(n, gn - lower);
  }
  return connected;
}

}  // namespace qk
