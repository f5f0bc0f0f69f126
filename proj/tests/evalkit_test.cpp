#include <doctest.h>

#include <json.hpp>
#include <random>

#include "preorder/error.hpp"
#include "preorder/evalkit.hpp"
#include "preorder/oracle.hpp"
#include "test_util.hpp"

using namespace preorder;

namespace {

struct Corpus {
  std::vector<SyntaxTree> trees;
  std::vector<Alignment> alignments;
};

Corpus random_corpus(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  Corpus c;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = testutil::uniform(rng, 1, 15);
    c.trees.push_back(testutil::random_tree(rng, n));
    c.alignments.push_back(testutil::random_alignment(rng, n, testutil::uniform(rng, 1, 15), 0.85));
  }
  return c;
}

}  // namespace

TEST_CASE("identity permutations change nothing") {
  const Corpus c = random_corpus(1, 200);
  std::vector<Permutation> ids;
  for (const auto& t : c.trees) ids.push_back(Permutation::identity(t.num_leaves()));
  const TauHistogram plain = tau_distribution(c.trees, c.alignments);
  const TauHistogram same = tau_distribution(c.trees, c.alignments, std::span<const Permutation>(ids));
  CHECK(plain.counts == same.counts);
  CHECK(plain.per_sentence == same.per_sentence);
  CHECK(plain.to_json() == same.to_json());
}

TEST_CASE("monotone corpus puts all mass in the top bin") {
  std::mt19937_64 rng(2);
  std::vector<SyntaxTree> trees;
  std::vector<Alignment> aligns;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = testutil::uniform(rng, 2, 10);
    trees.push_back(testutil::random_tree(rng, n));
    std::string line;
    for (std::size_t k = 0; k < n; ++k) line += std::to_string(k) + "-" + std::to_string(k) + " ";
    aligns.push_back(parse_alignment(line, n));
  }
  const TauHistogram h = tau_distribution(trees, aligns);
  CHECK(h.counts.back() == 50);
  CHECK(h.scored == 50);
  CHECK(h.fraction_perfect == 1.0);
  CHECK(h.mean == 1.0);
  CHECK(h.median == 1.0);
}

TEST_CASE("histogram invariants") {
  const Corpus c = random_corpus(3, 300);
  const TauHistogram h = tau_distribution(c.trees, c.alignments);
  std::size_t sum = 0;
  for (auto k : h.counts) sum += k;
  CHECK(sum == h.scored);
  CHECK(h.scored + h.unscored == 300);
  CHECK(h.edges.front() == -1.0);
  CHECK(h.edges.back() == 1.0);
  double mean = 0.0;
  std::size_t unscored = 0;
  for (std::size_t i = 0; i < c.trees.size(); ++i) {
    const auto idx = target_indices(c.alignments[i]);
    if (idx.size() < 2) {
      ++unscored;
      CHECK_FALSE(h.per_sentence[i].has_value());
      continue;
    }
    CHECK(*h.per_sentence[i] == testutil::brute_force_tau(idx));
    mean += testutil::brute_force_tau(idx);
  }
  CHECK(unscored == h.unscored);

  // recount against the reported edges; the top bin is closed
  std::array<std::size_t, TauHistogram::kBins> recount{};
  for (const auto& t : h.per_sentence) {
    if (!t) continue;
    for (std::size_t k = 0; k < TauHistogram::kBins; ++k)
      if (h.edges[k] <= *t && (*t < h.edges[k + 1] || k + 1 == TauHistogram::kBins)) {
        ++recount[k];
        break;
      }
  }
  CHECK(recount == h.counts);
  CHECK(h.edges[4] == -0.2);
  CHECK(h.edges[8] == 0.6);
  CHECK(h.mean == doctest::Approx(mean / static_cast<double>(h.scored)).epsilon(1e-12));

  const auto j = nlohmann::json::parse(h.to_json());
  CHECK(j["binning"] == "uniform");
  CHECK(j["counts"].size() == TauHistogram::kBins);
  CHECK(j["bin_edges"].size() == TauHistogram::kBins + 1);
  CHECK(j.contains("mean_tau"));
  CHECK(j.contains("median_tau"));
  CHECK(!h.bar_chart().empty());
}

TEST_CASE("gold-label permutations raise the mean tau") {
  const Corpus c = random_corpus(4, 500);
  std::vector<Permutation> perms;
  for (std::size_t i = 0; i < c.trees.size(); ++i)
    perms.push_back(apply_labels(c.trees[i], gold_labels(c.trees[i], c.alignments[i])).permutation);
  const TauHistogram before = tau_distribution(c.trees, c.alignments);
  const TauHistogram after = tau_distribution(c.trees, c.alignments, std::span<const Permutation>(perms));
  CHECK(after.mean > before.mean);
  CHECK(after.fraction_perfect >= before.fraction_perfect);
  for (std::size_t i = 0; i < c.trees.size(); ++i)
    if (before.per_sentence[i]) CHECK(*after.per_sentence[i] >= *before.per_sentence[i] - 1e-12);
}

TEST_CASE("tau_distribution length mismatch") {
  const Corpus c = random_corpus(5, 3);
  CHECK_THROWS_AS(tau_distribution(std::span(c.trees).first(2), c.alignments), DataError);
  std::vector<Permutation> one{Permutation::identity(c.trees[0].num_leaves())};
  CHECK_THROWS_AS(tau_distribution(c.trees, c.alignments, std::span<const Permutation>(one)), DataError);
}

TEST_CASE("label_accuracy") {
  SUBCASE("perfect prediction") {
    const std::vector<NodeLabelSet> gold{parse_labels("S I I"), parse_labels("I")};
    const LabelAccuracy a = label_accuracy(gold, gold);
    CHECK(a.accuracy() == 1.0);
    CHECK(a.precision(Label::kInverted) == 1.0);
    CHECK(a.recall(Label::kStraight) == 1.0);
  }
  SUBCASE("all Straight") {
    const std::vector<NodeLabelSet> gold{parse_labels("S I I")};
    const std::vector<NodeLabelSet> pred{parse_labels("S S S")};
    const LabelAccuracy a = label_accuracy(pred, gold);
    CHECK(a.recall(Label::kInverted) == 0.0);
    CHECK(a.precision(Label::kInverted) == 0.0);
  }
  SUBCASE("four nodes three matches") {
    const std::vector<NodeLabelSet> gold{parse_labels("S I"), parse_labels("I S")};
    const std::vector<NodeLabelSet> pred{parse_labels("S I"), parse_labels("I I")};
    const LabelAccuracy a = label_accuracy(pred, gold);
    CHECK(a.accuracy() == 0.75);
    CHECK(a.true_inverted == 2);
    CHECK(a.true_straight == 1);
    CHECK(a.false_inverted == 1);
    CHECK(a.false_straight == 0);
    CHECK(a.precision(Label::kInverted) == doctest::Approx(2.0 / 3.0));
    CHECK(a.recall(Label::kInverted) == 1.0);
    CHECK(a.recall(Label::kStraight) == 0.5);
  }
  SUBCASE("structure mismatch") {
    const std::vector<NodeLabelSet> gold{parse_labels("S I")};
    const std::vector<NodeLabelSet> pred{parse_labels("S")};
    CHECK_THROWS_AS(label_accuracy(pred, gold), DataError);
    CHECK_THROWS_AS(label_accuracy(std::vector<NodeLabelSet>{}, gold), DataError);
  }
}

TEST_CASE("confusion counts re-derive accuracy") {
  std::mt19937_64 rng(6);
  std::vector<NodeLabelSet> gold, pred;
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = testutil::uniform(rng, 0, 12);
    gold.push_back(testutil::labels_from_mask(k, rng()));
    pred.push_back(testutil::labels_from_mask(k, rng()));
  }
  const LabelAccuracy a = label_accuracy(pred, gold);
  std::size_t nodes = 0, matches = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    for (std::size_t k = 0; k < gold[i].size(); ++k) {
      ++nodes;
      matches += gold[i].labels[k] == pred[i].labels[k];
    }
  CHECK(a.total() == nodes);
  CHECK(a.accuracy() == doctest::Approx(static_cast<double>(matches) / static_cast<double>(nodes)));
  CHECK(a.accuracy() ==
        doctest::Approx(static_cast<double>(a.true_inverted + a.true_straight) / static_cast<double>(a.total())));
  const auto j = nlohmann::json::parse(a.to_json());
  CHECK(j["confusion"]["gold_I_pred_I"] == a.true_inverted);
}
