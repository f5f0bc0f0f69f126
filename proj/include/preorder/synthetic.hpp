#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "preorder/alignment.hpp"
#include "preorder/labels.hpp"
#include "preorder/tree.hpp"

namespace preorder {

// Small English-like phrase-structure grammar over a fixed 50-word lexicon.
// Used for toy corpora and for learnability checks.
class SyntheticGrammar {
 public:
  explicit SyntheticGrammar(std::uint64_t seed) : rng_(seed) {}

  // A binary sentence tree rooted at S.
  Constituent sample_sentence();

  static const std::vector<std::string>& lexicon();

 private:
  Constituent np(int depth);
  Constituent vp(int depth);
  Constituent pp(int depth);
  Constituent word(const std::string& pos);
  double coin() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  std::mt19937_64 rng_;
};

// Inverted exactly at nodes whose category is in `categories`.
NodeLabelSet category_labels(const SyntaxTree& tree, const std::set<std::string>& categories);

// Target side produced by reordering the source with `labels`; each source
// token is linked to its new position, and each link is dropped with
// probability `dropout`.
Alignment reordered_alignment(const SyntaxTree& tree, const NodeLabelSet& labels, double dropout,
                              std::mt19937_64& rng);

struct SyntheticSentence {
  SyntaxTree tree;
  NodeLabelSet rule_labels;  // Inverted at VP and PP
  Alignment alignment;       // head-final target with dropout
};

std::vector<SyntheticSentence> head_final_corpus(std::size_t count, double dropout, std::uint64_t seed);

std::string format_alignment(const Alignment& alignment);

}  // namespace preorder
