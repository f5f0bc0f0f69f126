#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace preorder {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

// Half-open range of source token positions.
struct Span {
  std::size_t lo = 0;
  std::size_t hi = 0;

  std::size_t size() const noexcept { return hi - lo; }
  friend bool operator==(const Span&, const Span&) = default;
};

// An n-ary bracketed constituent as read from a treebank line.
//
// A preterminal `(NN dog)` is stored as {tag "NN", token "dog"}. A bare
// token appearing among siblings, as in `(X a b)`, has an empty tag.
struct Constituent {
  std::string tag;
  std::string token;
  std::vector<Constituent> children;

  bool is_leaf() const noexcept { return children.empty(); }
  friend bool operator==(const Constituent&, const Constituent&) = default;
};

struct TreeNode {
  std::string tag;    // POS for leaves, category for internal nodes
  std::string token;  // leaves only
  NodeId left = kNoNode;
  NodeId right = kNoNode;
  Span span;

  bool is_leaf() const noexcept { return left == kNoNode; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Binary syntax tree. Nodes are stored in pre-order with the root at id 0,
// so every child id is greater than its parent's id and a reverse sweep
// over node ids is a valid bottom-up schedule.
class SyntaxTree {
 public:
  // Collapses unary chains and rejects nodes with more than two children.
  static SyntaxTree from_constituent(const Constituent& root);

  NodeId root() const noexcept { return 0; }
  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  std::size_t num_leaves() const noexcept { return leaves_.size(); }
  std::size_t num_internal() const noexcept { return internal_.size(); }

  // Leaf ids in left-to-right order.
  std::span<const NodeId> leaves() const noexcept { return leaves_; }
  // Internal node ids in pre-order.
  std::span<const NodeId> internal_nodes() const noexcept { return internal_; }
  // Position of an internal node within internal_nodes().
  std::size_t internal_rank(NodeId id) const;

  Constituent to_constituent() const;

  friend bool operator==(const SyntaxTree& a, const SyntaxTree& b) { return a.nodes_ == b.nodes_; }

 private:
  std::vector<TreeNode> nodes_;
  std::vector<NodeId> leaves_;
  std::vector<NodeId> internal_;
  std::vector<std::uint32_t> rank_;  // internal rank per node, or max for leaves
};

// Reads one bracketed expression. Throws ParseError with a character offset.
Constituent read_bracketed(std::string_view line);

// Right-binarizes every node with more than two children. Intermediate nodes
// are tagged `X|` where X is the category being split.
Constituent binarize(const Constituent& tree);

struct TreeOptions {
  bool binarize = false;
};

// read_bracketed + optional binarize + SyntaxTree::from_constituent.
SyntaxTree parse_tree(std::string_view line, TreeOptions options = {});

std::string serialize(const SyntaxTree& tree);
std::string serialize(const Constituent& tree);

std::vector<std::string> leaves_in_order(const SyntaxTree& tree);

}  // namespace preorder
