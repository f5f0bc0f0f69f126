#include "preorder/labels.hpp"

#include "preorder/error.hpp"

namespace preorder {

void check_covers(const NodeLabelSet& labels, const SyntaxTree& tree) {
  if (labels.size() != tree.num_internal())
    throw DataError("label count " + std::to_string(labels.size()) + " does not match " +
                    std::to_string(tree.num_internal()) + " internal nodes");
}

std::string format_labels(const NodeLabelSet& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    if (i) out += ' ';
    out += label_char(labels.labels[i]);
  }
  return out;
}

NodeLabelSet parse_labels(std::string_view line) {
  NodeLabelSet out;
  for (std::size_t i = 0; i < line.size(); ++i) {
    switch (line[i]) {
      case 'S': out.labels.push_back(Label::kStraight); break;
      case 'I': out.labels.push_back(Label::kInverted); break;
      case ' ':
      case '\t':
      case '\r': break;
      default:
        throw DataError("unexpected label symbol '" + std::string(1, line[i]) + "' at offset " +
                        std::to_string(i));
    }
  }
  return out;
}

}  // namespace preorder
