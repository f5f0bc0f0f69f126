#include "preorder/synthetic.hpp"

#include <map>

#include "preorder/preorderer.hpp"

namespace preorder {

namespace {

const std::map<std::string, std::vector<std::string>>& words_by_pos() {
  static const std::map<std::string, std::vector<std::string>> table{
      {"DT", {"the", "a", "this", "that", "every"}},
      {"PRP", {"he", "she", "they", "we", "it"}},
      {"JJ", {"new", "old", "small", "large", "red", "quick", "strong", "bright"}},
      {"NN", {"model", "paper", "city", "river", "student", "teacher", "system", "method", "book",
              "house", "parent", "result", "table", "window"}},
      {"VBZ", {"reads", "writes", "sees", "builds", "likes", "finds", "uses", "makes"}},
      {"IN", {"in", "on", "with", "from", "near", "under"}},
      {"MD", {"can", "will"}},
      {"RB", {"often", "rarely"}},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& SyntheticGrammar::lexicon() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> out;
    for (const auto& [pos, ws] : words_by_pos()) out.insert(out.end(), ws.begin(), ws.end());
    return out;
  }();
  return all;
}

Constituent SyntheticGrammar::word(const std::string& pos) {
  const auto& ws = words_by_pos().at(pos);
  const auto k = std::uniform_int_distribution<std::size_t>(0, ws.size() - 1)(rng_);
  return Constituent{pos, ws[k], {}};
}

Constituent SyntheticGrammar::np(int depth) {
  const double r = coin();
  if (r < 0.2) return word("PRP");
  if (depth < 3 && r < 0.4) return Constituent{"NP", "", {np(depth + 1), pp(depth + 1)}};
  if (r < 0.7) return Constituent{"NP", "", {word("DT"), word("NN")}};
  return Constituent{"NP", "", {word("DT"), Constituent{"NBAR", "", {word("JJ"), word("NN")}}}};
}

Constituent SyntheticGrammar::pp(int depth) { return Constituent{"PP", "", {word("IN"), np(depth + 1)}}; }

Constituent SyntheticGrammar::vp(int depth) {
  const double r = coin();
  if (depth < 3 && r < 0.2) return Constituent{"VP", "", {vp(depth + 1), pp(depth + 1)}};
  if (depth < 3 && r < 0.3) return Constituent{"VP", "", {word("MD"), vp(depth + 1)}};
  if (r < 0.4) return Constituent{"VP", "", {word("RB"), Constituent{"VP", "", {word("VBZ"), np(depth + 1)}}}};
  if (r < 0.55) return Constituent{"VP", "", {word("VBZ"), pp(depth + 1)}};
  return Constituent{"VP", "", {word("VBZ"), np(depth + 1)}};
}

Constituent SyntheticGrammar::sample_sentence() {
  if (coin() < 0.15) return Constituent{"S", "", {pp(1), Constituent{"S", "", {np(1), vp(1)}}}};
  return Constituent{"S", "", {np(1), vp(1)}};
}

NodeLabelSet category_labels(const SyntaxTree& tree, const std::set<std::string>& categories) {
  NodeLabelSet out;
  out.labels.reserve(tree.num_internal());
  for (NodeId id : tree.internal_nodes())
    out.labels.push_back(categories.contains(tree.node(id).tag) ? Label::kInverted : Label::kStraight);
  return out;
}

Alignment reordered_alignment(const SyntaxTree& tree, const NodeLabelSet& labels, double dropout,
                              std::mt19937_64& rng) {
  const Reordering r = apply_labels(tree, labels);
  Alignment a;
  a.target_len = tree.num_leaves();
  a.links.resize(tree.num_leaves());
  std::bernoulli_distribution drop(dropout);
  for (std::size_t i = 0; i < tree.num_leaves(); ++i) {
    if (!drop(rng)) a.links[i] = static_cast<TargetIndex>(r.permutation.new_position[i]);
  }
  return a;
}

std::vector<SyntheticSentence> head_final_corpus(std::size_t count, double dropout, std::uint64_t seed) {
  SyntheticGrammar grammar(seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  const std::set<std::string> inverted{"VP", "PP"};
  std::vector<SyntheticSentence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SyntaxTree tree = SyntaxTree::from_constituent(grammar.sample_sentence());
    NodeLabelSet labels = category_labels(tree, inverted);
    Alignment alignment = reordered_alignment(tree, labels, dropout, rng);
    out.push_back({std::move(tree), std::move(labels), std::move(alignment)});
  }
  return out;
}

std::string format_alignment(const Alignment& alignment) {
  std::string out;
  for (std::size_t i = 0; i < alignment.source_len(); ++i) {
    if (!alignment.links[i]) continue;
    if (!out.empty()) out += ' ';
    out += std::to_string(i) + "-" + std::to_string(*alignment.links[i]);
  }
  return out;
}

}  // namespace preorder
