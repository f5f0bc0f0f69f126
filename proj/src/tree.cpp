#include "preorder/tree.hpp"

#include <cctype>
#include <utility>

#include "preorder/error.hpp"

namespace preorder {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class BracketReader {
 public:
  explicit BracketReader(std::string_view text) : text_(text) {}

  Constituent read() {
    skip_space();
    if (at_end()) throw ParseError("empty tree", pos_);
    if (peek() != '(') throw ParseError("expected '('", pos_);
    Constituent root = read_node();
    skip_space();
    if (!at_end()) throw ParseError("trailing characters after tree", pos_);
    return root;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void skip_space() {
    while (!at_end() && is_space(peek())) ++pos_;
  }

  std::string read_atom() {
    const std::size_t start = pos_;
    while (!at_end() && !is_space(peek()) && peek() != '(' && peek() != ')') ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  // Assumes peek() == '('. The label must follow the bracket immediately;
  // `( (S ...))` has an empty label.
  Constituent read_node() {
    const std::size_t open = pos_;
    ++pos_;
    Constituent node;
    if (!at_end() && !is_space(peek()) && peek() != '(' && peek() != ')') node.tag = read_atom();

    std::vector<Constituent> children;
    for (;;) {
      skip_space();
      if (at_end()) throw ParseError("unbalanced '(' opened", open);
      const char c = peek();
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        children.push_back(read_node());
      } else {
        Constituent leaf;
        leaf.token = read_atom();
        children.push_back(std::move(leaf));
      }
    }

    if (children.empty()) throw ParseError("empty constituent", open);
    // `(NN dog)`: a single bare token under a label is a preterminal.
    if (children.size() == 1 && children[0].tag.empty() && children[0].is_leaf()) {
      node.token = std::move(children[0].token);
      if (node.tag.empty()) throw ParseError("token without a tag", open);
      return node;
    }
    node.children = std::move(children);
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

struct Builder {
  std::vector<TreeNode> nodes;
  std::vector<NodeId> leaves;

  // Returns the id of the node built for `c`, after collapsing any unary chain.
  NodeId build(const Constituent* c) {
    std::string top_tag;
    while (c->children.size() == 1) {
      if (top_tag.empty()) top_tag = c->tag;
      c = &c->children[0];
    }
    const auto id = static_cast<NodeId>(nodes.size());
    nodes.emplace_back();
    if (c->is_leaf()) {
      // Bottom-most preterminal wins; fall back to the chain's label for bare tokens.
      nodes[id].tag = c->tag.empty() ? top_tag : c->tag;
      nodes[id].token = c->token;
      const std::size_t pos = leaves.size();
      nodes[id].span = {pos, pos + 1};
      leaves.push_back(id);
      return id;
    }
    if (c->children.size() > 2) throw ArityError(c->tag, c->children.size());
    nodes[id].tag = top_tag.empty() ? c->tag : top_tag;
    const NodeId l = build(&c->children[0]);
    const NodeId r = build(&c->children[1]);
    nodes[id].left = l;
    nodes[id].right = r;
    nodes[id].span = {nodes[l].span.lo, nodes[r].span.hi};
    return id;
  }
};

Constituent binarize_node(const Constituent& c) {
  Constituent out;
  out.tag = c.tag;
  out.token = c.token;
  if (c.children.size() <= 2) {
    for (const auto& child : c.children) out.children.push_back(binarize_node(child));
    return out;
  }
  // (X c1 c2 ... ck) -> (X c1 (X| c2 (X| ... (X| c{k-1} ck))))
  const std::string inner_tag = c.tag + "|";
  Constituent tail;
  tail.tag = inner_tag;
  tail.children.push_back(binarize_node(c.children[c.children.size() - 2]));
  tail.children.push_back(binarize_node(c.children.back()));
  for (std::size_t i = c.children.size() - 2; i-- > 1;) {
    Constituent next;
    next.tag = inner_tag;
    next.children.push_back(binarize_node(c.children[i]));
    next.children.push_back(std::move(tail));
    tail = std::move(next);
  }
  out.children.push_back(binarize_node(c.children[0]));
  out.children.push_back(std::move(tail));
  return out;
}

void serialize_into(const Constituent& c, std::string& out) {
  if (c.is_leaf()) {
    if (c.tag.empty()) {
      out += c.token;
    } else {
      out += '(';
      out += c.tag;
      out += ' ';
      out += c.token;
      out += ')';
    }
    return;
  }
  out += '(';
  out += c.tag;
  for (const auto& child : c.children) {
    out += ' ';
    serialize_into(child, out);
  }
  out += ')';
}

}  // namespace

SyntaxTree SyntaxTree::from_constituent(const Constituent& root) {
  Builder builder;
  builder.build(&root);
  SyntaxTree tree;
  tree.nodes_ = std::move(builder.nodes);
  tree.leaves_ = std::move(builder.leaves);
  tree.rank_.assign(tree.nodes_.size(), std::numeric_limits<std::uint32_t>::max());
  for (NodeId id = 0; id < tree.nodes_.size(); ++id) {
    if (!tree.nodes_[id].is_leaf()) {
      tree.rank_[id] = static_cast<std::uint32_t>(tree.internal_.size());
      tree.internal_.push_back(id);
    }
  }
  return tree;
}

std::size_t SyntaxTree::internal_rank(NodeId id) const {
  const auto r = rank_.at(id);
  if (r == std::numeric_limits<std::uint32_t>::max())
    throw std::out_of_range("node " + std::to_string(id) + " is a leaf");
  return r;
}

Constituent SyntaxTree::to_constituent() const {
  auto convert = [this](auto& self, NodeId id) -> Constituent {
    const TreeNode& n = nodes_[id];
    Constituent c;
    c.tag = n.tag;
    c.token = n.token;
    if (!n.is_leaf()) {
      c.children.push_back(self(self, n.left));
      c.children.push_back(self(self, n.right));
    }
    return c;
  };
  return convert(convert, root());
}

Constituent read_bracketed(std::string_view line) { return BracketReader(line).read(); }

Constituent binarize(const Constituent& tree) { return binarize_node(tree); }

SyntaxTree parse_tree(std::string_view line, TreeOptions options) {
  Constituent c = read_bracketed(line);
  if (options.binarize) c = binarize(c);
  return SyntaxTree::from_constituent(c);
}

std::string serialize(const Constituent& tree) {
  std::string out;
  serialize_into(tree, out);
  return out;
}

std::string serialize(const SyntaxTree& tree) { return serialize(tree.to_constituent()); }

std::vector<std::string> leaves_in_order(const SyntaxTree& tree) {
  std::vector<std::string> out;
  out.reserve(tree.num_leaves());
  for (NodeId id : tree.leaves()) out.push_back(tree.node(id).token);
  return out;
}

}  // namespace preorder
