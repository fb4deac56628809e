#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "core/labeled_operator.hpp"

namespace qk {

/// Ground set of the cumulant sums: an optional leading cluster {Y} that is
/// treated as a single element, followed by single particle labels.
struct ClusteredSet {
  std::vector<Labels> elements;
  bool has_cluster = false;

  static ClusteredSet clustered(Labels cluster, const Labels& singles);
  static ClusteredSet plain(const Labels& singles);

  std::size_t size() const { return elements.size(); }
  bool empty() const { return elements.empty(); }
  std::string to_string() const;
};

/// Blocks hold element indices into the ground set.
struct Partition {
  std::vector<std::vector<std::size_t>> blocks;
  std::size_t size() const { return blocks.size(); }
};

/// All set partitions of {0,...,n-1}; blocks ordered by least element.
/// Results are cached and shared.
const std::vector<Partition>& set_partitions(std::size_t n);

std::vector<Partition> partitions(const ClusteredSet& s);

long long mobius_coefficient(std::size_t block_count);
inline long long mobius_coefficient(const Partition& p) {
  return mobius_coefficient(p.size());
}

Labels declusterize(const ClusteredSet& s);
Labels declusterize(const ClusteredSet& s, const std::vector<std::size_t>& block);

std::string to_string(const Partition& p, const ClusteredSet& s);

/// Set partition of a linearly ordered label list. Blocks keep the induced
/// order and are listed by their least element (position in the list).
using Dissection = std::vector<Labels>;

std::vector<Dissection> dissections(const Labels& z, std::size_t max_blocks);

using Composition = std::vector<int>;

/// Ordered tuples of positive parts with sum <= n and length <= k_max,
/// grouped by length (k = 0 first), lexicographic within a length.
std::vector<Composition> compositions(int n, int k_max);

long long factorial(int n);
long long bell_number(int n);

/// Connected family: solves g_n = sum_P prod_{B in P} c_{|B|}(B) for c,
/// with c_1 = I. Input operators live on labels 1..n.
std::map<int, LabeledOperator> mobius_invert(const std::map<int, LabeledOperator>& g,
                                            int dim);

/// Forward direction: sum over partitions of `labels` of products of the
/// connected operators (c_1 = I, missing orders count as zero).
LabeledOperator partition_product_sum(const std::map<int, LabeledOperator>& connected,
                                      int dim, const Labels& labels);

}  // namespace qk
