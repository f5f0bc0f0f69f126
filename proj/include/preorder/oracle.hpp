#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

#include "preorder/alignment.hpp"
#include "preorder/labels.hpp"
#include "preorder/tree.hpp"

namespace preorder {

// Kendall's tau is undefined for fewer than two aligned indices.
class DegenerateTau : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Number of pairs i < j with y[i] < y[j]; equal values do not count.
// O(n log n) merge counting.
std::size_t count_ascending_pairs(std::span<const TargetIndex> y);

// 4 * ascending_pairs / (n (n - 1)) - 1. Throws DegenerateTau when n < 2.
double kendall_tau(std::span<const TargetIndex> y);

// Inverted iff swapping the node's children strictly increases the local tau
// of the concatenated child alignments. Straight when either child has no
// aligned token, and on ties.
Label gold_label(const SyntaxTree& tree, NodeId node, const Alignment& alignment);

// gold_label for every internal node, each against original source order.
NodeLabelSet gold_labels(const SyntaxTree& tree, const Alignment& alignment);

// Tau of the whole sentence after reordering with `labels`; 1.0 when fewer
// than two source tokens are aligned.
double oracle_permutation_tau(const SyntaxTree& tree, const Alignment& alignment,
                              const NodeLabelSet& labels);

}  // namespace preorder
