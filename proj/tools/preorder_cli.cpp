// Command-line front end: make-labels, train, apply, eval, inspect-model.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "preorder/corpus.hpp"
#include "preorder/error.hpp"
#include "preorder/evalkit.hpp"
#include "preorder/model.hpp"
#include "preorder/oracle.hpp"
#include "preorder/preorderer.hpp"
#include "preorder/trainer.hpp"

namespace fs = std::filesystem;
using namespace preorder;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += (out.empty() ? "" : " ") + t;
  return out;
}

struct MakeLabelsArgs {
  std::string trees, align, out;
  bool first_link = false;
  bool binarize = false;
};

void make_labels(const MakeLabelsArgs& a) {
  const auto trees = read_trees(a.trees, {a.binarize});
  const auto aligns = read_alignments(a.align, trees, a.first_link ? LinkPolicy::kFirstLink : LinkPolicy::kStrict);
  std::vector<std::string> lines;
  std::vector<Permutation> oracle;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const NodeLabelSet gold = gold_labels(trees[i], aligns[i]);
    lines.push_back(format_labels(gold));
    oracle.push_back(apply_labels(trees[i], gold).permutation);
  }
  write_file_atomic(a.out, join_lines(lines));

  const TauHistogram before = tau_distribution(trees, aligns);
  const TauHistogram after = tau_distribution(trees, aligns, std::span<const Permutation>(oracle));
  nlohmann::json summary{{"report", "oracle_tau"},
                         {"sentences", trees.size()},
                         {"scored", after.scored},
                         {"unscored", after.unscored},
                         {"mean_tau_original", before.mean},
                         {"mean_tau_oracle", after.mean},
                         {"fraction_tau_1_original", before.fraction_perfect},
                         {"fraction_tau_1_oracle", after.fraction_perfect}};
  std::cout << summary.dump() << "\n";
}

struct TrainArgs {
  std::string trees, labels, dev_trees, dev_labels, out;
  std::string leaf_tags = "on";
  bool binarize = false;
  bool quiet = false;
  TrainConfig config;
};

std::vector<LabeledTree> labeled_set(const std::string& tree_path, const std::string& label_path, bool binarize) {
  auto trees = read_trees(tree_path, {binarize});
  auto labels = read_labels(label_path, trees);
  std::vector<LabeledTree> out;
  out.reserve(trees.size());
  for (std::size_t i = 0; i < trees.size(); ++i) out.push_back({std::move(trees[i]), std::move(labels[i])});
  return out;
}

void train_command(TrainArgs a) {
  a.config.leaf_tags = a.leaf_tags == "on";
  a.config.validate();
  const auto train_set = labeled_set(a.trees, a.labels, a.binarize);
  const auto dev_set = labeled_set(a.dev_trees, a.dev_labels, a.binarize);
  if (train_set.empty()) throw DataError(a.trees + ": training set is empty");
  if (dev_set.empty()) throw DataError(a.dev_trees + ": development set is empty");

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const Vocab words = word_vocab(train_set, a.config.vocab_size);
  const Vocab tags = tag_vocab(train_set, a.config.vocab_size);
  {
    std::ostringstream w, t;
    words.save(w);
    tags.save(t);
    write_file_atomic(dir / "words.vocab", w.str());
    write_file_atomic(dir / "tags.vocab", t.str());
  }
  ModelParams initial = ModelParams::init({a.config.dim, a.config.use_tags, a.config.leaf_tags}, words, tags, a.config.seed);

  std::string metrics = nlohmann::json{{"initial_dev_loss", evaluate_loss(initial, dev_set, a.config.threads)}}.dump() + "\n";
  const TrainResult result =
      train(std::move(initial), train_set, dev_set, a.config, [&](const EpochRecord& r, const ModelParams& params) {
        const std::string name = "epoch-" + std::to_string(r.epoch) + ".model";
        params.save_file(dir / name);
        metrics += nlohmann::json{{"epoch", r.epoch},
                                  {"train_loss", r.train_loss},
                                  {"dev_loss", r.dev_loss},
                                  {"seconds", r.seconds},
                                  {"model", name}}
                       .dump() +
                   "\n";
        write_file_atomic(dir / "metrics.jsonl", metrics);
        if (!a.quiet)
          std::fprintf(stderr, "epoch %zu  train %.6f  dev %.6f  (%.1fs)\n", r.epoch, r.train_loss, r.dev_loss,
                       r.seconds);
      });
  metrics += nlohmann::json{{"selected_epoch", result.report.selected_epoch}}.dump() + "\n";
  write_file_atomic(dir / "metrics.jsonl", metrics);
  result.best.save_file(dir / "best.model");
  write_file_atomic(dir / "BEST", "epoch-" + std::to_string(result.report.selected_epoch) + ".model\n");
  if (!a.quiet) std::fprintf(stderr, "selected epoch %zu\n", result.report.selected_epoch);
}

struct ApplyArgs {
  std::string model, trees, out, perm_out, labels_out;
  bool binarize = false;
};

void apply_command(const ApplyArgs& a) {
  const ModelParams model = ModelParams::load_file(a.model);
  const auto trees = read_trees(a.trees, {a.binarize});
  std::vector<std::string> text, perms, labels;
  for (const auto& t : trees) {
    const Prediction p = predict_and_apply(model, t);
    text.push_back(join_tokens(p.reordering.tokens));
    perms.push_back(format_permutation(p.reordering.permutation));
    labels.push_back(format_labels(p.labels));
  }
  // Write every output only after all sentences succeeded.
  write_file_atomic(a.out, join_lines(text));
  if (!a.perm_out.empty()) write_file_atomic(a.perm_out, join_lines(perms));
  if (!a.labels_out.empty()) write_file_atomic(a.labels_out, join_lines(labels));
}

struct EvalArgs {
  std::string trees, align, perm, pred_labels, gold_labels, out;
  bool first_link = false;
  bool binarize = false;
  bool chart = false;
};

std::string tagged(const std::string& json, const char* key, const char* value) {
  auto j = nlohmann::json::parse(json);
  j[key] = value;
  return j.dump();
}

void eval_command(const EvalArgs& a) {
  if (a.pred_labels.empty() != a.gold_labels.empty())
    throw ConfigError("--pred-labels and --gold-labels must be given together");
  const auto trees = read_trees(a.trees, {a.binarize});
  const auto aligns = read_alignments(a.align, trees, a.first_link ? LinkPolicy::kFirstLink : LinkPolicy::kStrict);

  std::string report;
  std::string chart;
  const TauHistogram base = tau_distribution(trees, aligns);
  report += tagged(base.to_json(), "alignment", "original") + "\n";
  chart += "original order\n" + base.bar_chart();
  if (!a.perm.empty()) {
    const auto lines = read_lines(a.perm);
    if (lines.size() != trees.size())
      throw DataError(a.perm + ": " + std::to_string(lines.size()) + " lines but " + a.trees + " has " +
                      std::to_string(trees.size()));
    std::vector<Permutation> perms;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        perms.push_back(parse_permutation(lines[i]));
      } catch (const DataError& e) {
        throw DataError(a.perm + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
    const TauHistogram after = tau_distribution(trees, aligns, std::span<const Permutation>(perms));
    report += tagged(after.to_json(), "alignment", "permuted") + "\n";
    chart += "permuted\n" + after.bar_chart();
  }
  if (!a.pred_labels.empty()) {
    const auto pred = read_labels(a.pred_labels, trees);
    const auto gold = read_labels(a.gold_labels, trees);
    report += label_accuracy(pred, gold).to_json() + "\n";
  }
  if (!a.out.empty()) write_file_atomic(a.out, report);
  std::cout << report;
  if (a.chart) std::cout << chart;
}

void inspect_command(const std::string& path) {
  const ModelParams m = ModelParams::load_file(path);
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : m.store()) {
    double sq = 0.0;
    for (double v : p.value.data()) sq += v * v;
    tensors.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"l2_norm", std::sqrt(sq)}});
  }
  nlohmann::json j{{"format_version", ModelParams::kFileVersion},
                   {"dim", m.dim()},
                   {"use_tags", m.use_tags()},
                   {"leaf_tags", m.config().leaf_tags},
                   {"word_vocab", m.words().size()},
                   {"tag_vocab", m.tags().size()},
                   {"tensors", tensors}};
  std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-based preordering with a recursive neural network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "preorder 1");

  MakeLabelsArgs ml;
  auto* ml_cmd = app.add_subcommand("make-labels", "Derive gold Straight/Inverted labels from alignments");
  ml_cmd->add_option("--trees", ml.trees, "Bracketed trees, one per line")->required();
  ml_cmd->add_option("--align", ml.align, "Source-target alignments (i-j pairs), one line per tree")->required();
  ml_cmd->add_option("--out", ml.out, "Label file to write")->required();
  ml_cmd->add_flag("--first-link", ml.first_link, "Keep the first link of a source word aligned more than once");
  ml_cmd->add_flag("--binarize", ml.binarize, "Right-binarize nodes with more than two children");

  TrainArgs tr;
  TrainConfig& c = tr.config;
  auto* tr_cmd = app.add_subcommand("train", "Train a model and write per-epoch checkpoints");
  tr_cmd->add_option("--trees", tr.trees, "Training trees")->required();
  tr_cmd->add_option("--labels", tr.labels, "Training labels")->required();
  tr_cmd->add_option("--dev-trees", tr.dev_trees, "Development trees")->required();
  tr_cmd->add_option("--dev-labels", tr.dev_labels, "Development labels")->required();
  tr_cmd->add_option("--out", tr.out, "Output directory")->required();
  tr_cmd->add_option("--dim", c.dim, "Hidden and embedding width")->capture_default_str();
  tr_cmd->add_option("--epochs", c.max_epochs, "Maximum number of epochs")->capture_default_str();
  tr_cmd->add_option("--batch-size", c.batch_size, "Trees per mini-batch")->capture_default_str();
  tr_cmd->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
  tr_cmd->add_option("--beta1", c.adam_beta1, "Adam first-moment decay")->capture_default_str();
  tr_cmd->add_option("--beta2", c.adam_beta2, "Adam second-moment decay")->capture_default_str();
  tr_cmd->add_option("--eps", c.adam_eps, "Adam epsilon")->capture_default_str();
  tr_cmd->add_option("--weight-decay", c.weight_decay, "L2 coefficient on weight matrices")->capture_default_str();
  tr_cmd->add_option("--clip-norm", c.clip_norm, "Global gradient norm threshold")->capture_default_str();
  tr_cmd->add_flag("--decoupled-decay", c.decoupled_decay, "Apply weight decay to weights instead of gradients");
  tr_cmd->add_option("--seed", c.seed, "Seed for initialization and shuffling")->capture_default_str();
  tr_cmd->add_flag("--tags", c.use_tags, "Use the tag-augmented composition");
  tr_cmd->add_option("--leaf-tags", tr.leaf_tags, "With --tags, feed POS embeddings to leaves")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  tr_cmd->add_option("--vocab-size", c.vocab_size, "Vocabulary size including <unk>")->capture_default_str();
  tr_cmd->add_option("--threads", c.threads, "Worker threads per batch")->capture_default_str();
  tr_cmd->add_flag("--binarize", tr.binarize, "Right-binarize nodes with more than two children");
  tr_cmd->add_flag("--quiet", tr.quiet, "No progress output");

  ApplyArgs ap;
  auto* ap_cmd = app.add_subcommand("apply", "Preorder sentences with a trained model");
  ap_cmd->add_option("--model", ap.model, "Model file")->required();
  ap_cmd->add_option("--trees", ap.trees, "Bracketed trees")->required();
  ap_cmd->add_option("--out", ap.out, "Reordered sentences")->required();
  ap_cmd->add_option("--perm-out", ap.perm_out, "Permutation per sentence (new position of each token)");
  ap_cmd->add_option("--labels-out", ap.labels_out, "Predicted labels, gold label format");
  ap_cmd->add_flag("--binarize", ap.binarize, "Right-binarize nodes with more than two children");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Kendall's tau distribution and label accuracy");
  ev_cmd->add_option("--trees", ev.trees, "Bracketed trees")->required();
  ev_cmd->add_option("--align", ev.align, "Alignments")->required();
  ev_cmd->add_option("--perm", ev.perm, "Permutations from apply --perm-out");
  ev_cmd->add_option("--pred-labels", ev.pred_labels, "Predicted labels");
  ev_cmd->add_option("--gold-labels", ev.gold_labels, "Gold labels");
  ev_cmd->add_option("--out", ev.out, "Also write the report here");
  ev_cmd->add_flag("--first-link", ev.first_link, "Keep the first link of a source word aligned more than once");
  ev_cmd->add_flag("--binarize", ev.binarize, "Right-binarize nodes with more than two children");
  ev_cmd->add_flag("--chart", ev.chart, "Print text histograms after the report");

  std::string inspect_path;
  auto* in_cmd = app.add_subcommand("inspect-model", "Print model configuration and tensor shapes");
  in_cmd->add_option("--model", inspect_path, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ml_cmd) make_labels(ml);
    if (*tr_cmd) train_command(tr);
    if (*ap_cmd) apply_command(ap);
    if (*ev_cmd) eval_command(ev);
    if (*in_cmd) inspect_command(inspect_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
