#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "preorder/alignment.hpp"
#include "preorder/labels.hpp"
#include "preorder/preorderer.hpp"
#include "preorder/tree.hpp"

namespace preorder {

struct TauHistogram {
  static constexpr std::size_t kBins = 10;

  std::array<double, kBins + 1> edges{};  // uniform over [-1, 1]
  std::array<std::size_t, kBins> counts{};
  std::vector<std::optional<double>> per_sentence;  // nullopt when < 2 aligned
  std::size_t scored = 0;
  std::size_t unscored = 0;
  double mean = 0.0;
  double median = 0.0;
  double fraction_perfect = 0.0;  // share of scored sentences with tau == 1

  // Share of scored sentences with tau >= threshold.
  double fraction_at_least(double threshold) const;
  std::string to_json() const;
  std::string bar_chart(std::size_t width = 50) const;
};

// Per-sentence tau of each alignment, after moving links by `permutations`
// when given. Throws DataError on length mismatches.
TauHistogram tau_distribution(std::span<const SyntaxTree> trees,
                              std::span<const Alignment> alignments,
                              std::optional<std::span<const Permutation>> permutations = std::nullopt);

// Inverted is the positive class.
struct LabelAccuracy {
  std::size_t true_inverted = 0;
  std::size_t true_straight = 0;
  std::size_t false_inverted = 0;  // predicted Inverted, gold Straight
  std::size_t false_straight = 0;  // predicted Straight, gold Inverted

  std::size_t total() const noexcept {
    return true_inverted + true_straight + false_inverted + false_straight;
  }
  double accuracy() const;  // 1.0 when there are no nodes
  // Ratios with a zero denominator are reported as 0.
  double precision(Label l) const;
  double recall(Label l) const;
  std::string to_json() const;
};

LabelAccuracy label_accuracy(std::span<const NodeLabelSet> predicted,
                             std::span<const NodeLabelSet> gold);

}  // namespace preorder
