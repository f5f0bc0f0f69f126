#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "preorder/alignment.hpp"
#include "preorder/labels.hpp"
#include "preorder/tree.hpp"

namespace preorder {

class ModelParams;

// new_position[i] is where original source token i ends up.
struct Permutation {
  std::vector<std::size_t> new_position;

  std::size_t size() const noexcept { return new_position.size(); }
  static Permutation identity(std::size_t n);
  bool is_bijection() const;
  friend bool operator==(const Permutation&, const Permutation&) = default;
};

// Original leaf positions in the order an Inverted-aware traversal visits them.
std::vector<std::size_t> reordered_leaf_positions(const SyntaxTree& tree,
                                                  const NodeLabelSet& labels);

struct Reordering {
  std::vector<std::string> tokens;
  Permutation permutation;
};

// In-order traversal that visits the right child first at Inverted nodes.
Reordering apply_labels(const SyntaxTree& tree, const NodeLabelSet& labels);

struct Prediction {
  Reordering reordering;
  NodeLabelSet labels;
};

Prediction predict_and_apply(const ModelParams& params, const SyntaxTree& tree);

// Moves each alignment link to its source token's new position.
Alignment permute(const Alignment& alignment, const Permutation& permutation);

std::string format_permutation(const Permutation& p);
Permutation parse_permutation(std::string_view line);

}  // namespace preorder
