#include "preorder/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "preorder/error.hpp"
#include "preorder/oracle.hpp"

namespace preorder {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

TauHistogram tau_distribution(std::span<const SyntaxTree> trees,
                              std::span<const Alignment> alignments,
                              std::optional<std::span<const Permutation>> permutations) {
  if (trees.size() != alignments.size())
    throw DataError("tree count " + std::to_string(trees.size()) + " does not match alignment count " +
                    std::to_string(alignments.size()));
  if (permutations && permutations->size() != alignments.size())
    throw DataError("permutation count " + std::to_string(permutations->size()) +
                    " does not match alignment count " + std::to_string(alignments.size()));

  TauHistogram h;
  for (std::size_t k = 0; k <= TauHistogram::kBins; ++k)
    h.edges[k] = (2.0 * static_cast<double>(k) - TauHistogram::kBins) / TauHistogram::kBins;

  std::vector<double> scored;
  for (std::size_t i = 0; i < alignments.size(); ++i) {
    if (alignments[i].source_len() != trees[i].num_leaves())
      throw DataError("sentence " + std::to_string(i + 1) + ": alignment covers " +
                      std::to_string(alignments[i].source_len()) + " tokens, tree has " +
                      std::to_string(trees[i].num_leaves()));
    const Alignment a = permutations ? permute(alignments[i], (*permutations)[i]) : alignments[i];
    const auto y = target_indices(a);
    if (y.size() < 2) {
      h.per_sentence.push_back(std::nullopt);
      ++h.unscored;
      continue;
    }
    const double tau = kendall_tau(y);
    h.per_sentence.push_back(tau);
    scored.push_back(tau);
    // last edge <= tau, so bins agree with the reported edges exactly
    const auto bin = static_cast<std::size_t>(std::upper_bound(h.edges.begin(), h.edges.end(), tau) - h.edges.begin()) - 1;
    ++h.counts[std::min(bin, TauHistogram::kBins - 1)];
  }

  h.scored = scored.size();
  if (!scored.empty()) {
    double total = 0.0;
    std::size_t perfect = 0;
    for (double t : scored) {
      total += t;
      if (t == 1.0) ++perfect;
    }
    h.mean = total / static_cast<double>(scored.size());
    h.fraction_perfect = ratio(perfect, scored.size());
    std::sort(scored.begin(), scored.end());
    const std::size_t n = scored.size();
    h.median = n % 2 ? scored[n / 2] : 0.5 * (scored[n / 2 - 1] + scored[n / 2]);
  }
  return h;
}

double TauHistogram::fraction_at_least(double threshold) const {
  std::size_t hits = 0;
  for (const auto& t : per_sentence)
    if (t && *t >= threshold) ++hits;
  return ratio(hits, scored);
}

std::string TauHistogram::to_json() const {
  nlohmann::json j{{"report", "tau_distribution"},
                   {"binning", "uniform"},
                   {"bins", kBins},
                   {"bin_edges", edges},
                   {"counts", counts},
                   {"scored", scored},
                   {"unscored", unscored},
                   {"mean_tau", mean},
                   {"median_tau", median},
                   {"fraction_tau_1", fraction_perfect}};
  return j.dump();
}

std::string TauHistogram::bar_chart(std::size_t width) const {
  const std::size_t peak = std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end()));
  std::string out;
  char label[64];
  for (std::size_t k = 0; k < kBins; ++k) {
    std::snprintf(label, sizeof label, "[%+.1f, %+.1f%c %6zu ", edges[k], edges[k + 1],
                  k + 1 == kBins ? ']' : ')', counts[k]);
    out += label;
    out.append(counts[k] * width / peak, '#');
    out += '\n';
  }
  return out;
}

double LabelAccuracy::accuracy() const {
  return total() == 0 ? 1.0 : ratio(true_inverted + true_straight, total());
}

double LabelAccuracy::precision(Label l) const {
  return l == Label::kInverted ? ratio(true_inverted, true_inverted + false_inverted)
                               : ratio(true_straight, true_straight + false_straight);
}

double LabelAccuracy::recall(Label l) const {
  return l == Label::kInverted ? ratio(true_inverted, true_inverted + false_straight)
                               : ratio(true_straight, true_straight + false_inverted);
}

std::string LabelAccuracy::to_json() const {
  nlohmann::json j{{"report", "label_accuracy"},
                   {"nodes", total()},
                   {"accuracy", accuracy()},
                   {"confusion",
                    {{"gold_I_pred_I", true_inverted},
                     {"gold_S_pred_S", true_straight},
                     {"gold_S_pred_I", false_inverted},
                     {"gold_I_pred_S", false_straight}}},
                   {"precision_I", precision(Label::kInverted)},
                   {"recall_I", recall(Label::kInverted)},
                   {"precision_S", precision(Label::kStraight)},
                   {"recall_S", recall(Label::kStraight)}};
  return j.dump();
}

LabelAccuracy label_accuracy(std::span<const NodeLabelSet> predicted,
                             std::span<const NodeLabelSet> gold) {
  if (predicted.size() != gold.size())
    throw DataError("predicted label count " + std::to_string(predicted.size()) +
                    " does not match gold count " + std::to_string(gold.size()));
  LabelAccuracy acc;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i].size() != gold[i].size())
      throw DataError("sentence " + std::to_string(i + 1) + ": " + std::to_string(predicted[i].size()) +
                      " predicted labels vs " + std::to_string(gold[i].size()) + " gold labels");
    for (std::size_t k = 0; k < gold[i].size(); ++k) {
      const bool p = predicted[i].labels[k] == Label::kInverted;
      const bool g = gold[i].labels[k] == Label::kInverted;
      if (p && g) ++acc.true_inverted;
      else if (!p && !g) ++acc.true_straight;
      else if (p) ++acc.false_inverted;
      else ++acc.false_straight;
    }
  }
  return acc;
}

}  // namespace preorder
