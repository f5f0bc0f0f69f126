#include "preorder/preorderer.hpp"

#include <charconv>

#include "preorder/error.hpp"
#include "preorder/model.hpp"

namespace preorder {

Permutation Permutation::identity(std::size_t n) {
  Permutation p;
  p.new_position.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.new_position[i] = i;
  return p;
}

bool Permutation::is_bijection() const {
  std::vector<bool> seen(new_position.size(), false);
  for (std::size_t v : new_position) {
    if (v >= seen.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

std::vector<std::size_t> reordered_leaf_positions(const SyntaxTree& tree,
                                                  const NodeLabelSet& labels) {
  check_covers(labels, tree);
  std::vector<std::size_t> order;
  order.reserve(tree.num_leaves());
  std::vector<NodeId> stack{tree.root()};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const TreeNode& n = tree.node(id);
    if (n.is_leaf()) {
      order.push_back(n.span.lo);
      continue;
    }
    const bool inverted = labels.at(tree, id) == Label::kInverted;
    // Push the child to visit second first.
    stack.push_back(inverted ? n.left : n.right);
    stack.push_back(inverted ? n.right : n.left);
  }
  return order;
}

Reordering apply_labels(const SyntaxTree& tree, const NodeLabelSet& labels) {
  const auto order = reordered_leaf_positions(tree, labels);
  Reordering out;
  out.tokens.reserve(order.size());
  out.permutation.new_position.resize(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    out.tokens.push_back(tree.node(tree.leaves()[order[k]]).token);
    out.permutation.new_position[order[k]] = k;
  }
  return out;
}

Prediction predict_and_apply(const ModelParams& params, const SyntaxTree& tree) {
  Prediction out;
  out.labels = predict_labels(params, tree);
  out.reordering = apply_labels(tree, out.labels);
  return out;
}

Alignment permute(const Alignment& alignment, const Permutation& permutation) {
  if (permutation.size() != alignment.source_len())
    throw DataError("permutation length " + std::to_string(permutation.size()) +
                    " does not match source length " + std::to_string(alignment.source_len()));
  if (!permutation.is_bijection()) throw DataError("permutation is not a bijection");
  Alignment out;
  out.target_len = alignment.target_len;
  out.links.resize(alignment.source_len());
  for (std::size_t i = 0; i < alignment.source_len(); ++i)
    out.links[permutation.new_position[i]] = alignment.links[i];
  return out;
}

std::string format_permutation(const Permutation& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(p.new_position[i]);
  }
  return out;
}

Permutation parse_permutation(std::string_view line) {
  Permutation p;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), value);
    if (ec != std::errc()) throw DataError("malformed permutation entry at offset " + std::to_string(pos));
    pos = static_cast<std::size_t>(ptr - line.data());
    if (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r')
      throw DataError("malformed permutation entry at offset " + std::to_string(pos));
    p.new_position.push_back(value);
  }
  if (!p.is_bijection()) throw DataError("permutation is not a bijection");
  return p;
}

}  // namespace preorder
