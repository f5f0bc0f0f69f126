#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "preorder/tree.hpp"

namespace preorder {

enum class Label : std::uint8_t { kStraight = 0, kInverted = 1 };

inline char label_char(Label l) { return l == Label::kInverted ? 'I' : 'S'; }

// One label per internal node, in pre-order (SyntaxTree::internal_nodes()).
struct NodeLabelSet {
  std::vector<Label> labels;

  Label at(const SyntaxTree& tree, NodeId id) const { return labels.at(tree.internal_rank(id)); }
  std::size_t size() const noexcept { return labels.size(); }
  friend bool operator==(const NodeLabelSet&, const NodeLabelSet&) = default;
};

// Throws DataError unless there is exactly one label per internal node.
void check_covers(const NodeLabelSet& labels, const SyntaxTree& tree);

// Space-separated S/I symbols; empty for a 1-leaf tree.
std::string format_labels(const NodeLabelSet& labels);
// Accepts S/I symbols with or without separating whitespace.
NodeLabelSet parse_labels(std::string_view line);

}  // namespace preorder
