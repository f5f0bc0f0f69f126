#include "preorder/oracle.hpp"

#include <algorithm>
#include <vector>

#include "preorder/error.hpp"
#include "preorder/preorderer.hpp"

namespace preorder {

namespace {

// Sorts `v` ascending and returns the number of strictly ascending pairs.
std::size_t sort_and_count(std::vector<TargetIndex>& v, std::vector<TargetIndex>& scratch,
                           std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::size_t count = sort_and_count(v, scratch, lo, mid) + sort_and_count(v, scratch, mid, hi);
  // For each right element, count left elements strictly smaller.
  std::size_t i = lo;
  std::size_t k = lo;
  for (std::size_t j = mid; j < hi; ++j) {
    while (i < mid && v[i] < v[j]) scratch[k++] = v[i++];
    count += i - lo;
    scratch[k++] = v[j];
  }
  while (i < mid) scratch[k++] = v[i++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return count;
}

}  // namespace

std::size_t count_ascending_pairs(std::span<const TargetIndex> y) {
  std::vector<TargetIndex> v(y.begin(), y.end());
  std::vector<TargetIndex> scratch(v.size());
  return sort_and_count(v, scratch, 0, v.size());
}

double kendall_tau(std::span<const TargetIndex> y) {
  const std::size_t n = y.size();
  if (n < 2) throw DegenerateTau("Kendall's tau needs at least two aligned indices");
  const double pairs = static_cast<double>(count_ascending_pairs(y));
  return 4.0 * pairs / (static_cast<double>(n) * static_cast<double>(n - 1)) - 1.0;
}

Label gold_label(const SyntaxTree& tree, NodeId node, const Alignment& alignment) {
  const TreeNode& n = tree.node(node);
  const auto left = target_indices(alignment, tree.node(n.left).span);
  const auto right = target_indices(alignment, tree.node(n.right).span);
  if (left.empty() || right.empty()) return Label::kStraight;

  std::vector<TargetIndex> straight(left);
  straight.insert(straight.end(), right.begin(), right.end());
  std::vector<TargetIndex> inverted(right);
  inverted.insert(inverted.end(), left.begin(), left.end());
  return kendall_tau(inverted) > kendall_tau(straight) ? Label::kInverted : Label::kStraight;
}

NodeLabelSet gold_labels(const SyntaxTree& tree, const Alignment& alignment) {
  if (alignment.source_len() != tree.num_leaves())
    throw DataError("alignment covers " + std::to_string(alignment.source_len()) +
                    " source tokens but the tree has " + std::to_string(tree.num_leaves()));
  NodeLabelSet out;
  out.labels.reserve(tree.num_internal());
  for (NodeId id : tree.internal_nodes()) out.labels.push_back(gold_label(tree, id, alignment));
  return out;
}

double oracle_permutation_tau(const SyntaxTree& tree, const Alignment& alignment,
                              const NodeLabelSet& labels) {
  const auto order = reordered_leaf_positions(tree, labels);
  std::vector<TargetIndex> y;
  y.reserve(order.size());
  for (std::size_t pos : order) {
    if (const auto& l = alignment.links.at(pos)) y.push_back(*l);
  }
  return y.size() < 2 ? 1.0 : kendall_tau(y);
}

}  // namespace preorder
