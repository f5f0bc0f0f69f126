#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "preorder/model.hpp"
#include "preorder/tape.hpp"

namespace preorder {

struct TrainConfig {
  std::size_t batch_size = 500;
  std::size_t max_epochs = 5;
  std::size_t dim = 200;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 1e-4;
  double clip_norm = 5.0;
  bool decoupled_decay = false;
  std::uint64_t seed = 1;
  bool use_tags = false;
  bool leaf_tags = true;
  std::size_t vocab_size = 50000;
  std::size_t threads = 1;

  // Throws ConfigError on the first invalid field.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  double initial_dev_loss = 0.0;  // before the first update
  std::vector<EpochRecord> epochs;
  std::size_t selected_epoch = 0;  // argmin dev loss, earliest on ties

  // One JSON object per line. Wall times vary between runs, so byte-level
  // comparisons should pass include_timing = false.
  std::string to_jsonl(bool include_timing = true) const;
};

// First and second moment estimates per parameter.
struct AdamState {
  explicit AdamState(const ParamStore& params);
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::uint64_t step = 0;
};

// Applies (1) weight decay to weight gradients, (2) global-norm clipping,
// (3) a bias-corrected Adam update. Biases and embedding tables are never
// decayed. With decoupled_decay the decay is applied to the weights directly
// instead of through the gradient. Throws NumericError naming the parameter
// when a gradient is not finite. Returns the pre-clip global norm.
double adam_step(ParamStore& params, Gradients& grads, AdamState& state, const TrainConfig& config);

// Mean per-tree loss over the dataset; 0 for an empty dataset.
double evaluate_loss(const ModelParams& params, std::span<const LabeledTree> dataset,
                     std::size_t threads = 1);

// 1-based index of the smallest dev loss, earliest on ties. 0 when empty.
std::size_t select_best_epoch(std::span<const double> dev_losses);

// Deterministic seed-derived shuffle of [0, n) for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

struct TrainResult {
  ModelParams best;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochRecord&, const ModelParams&)>;

// Trains from `initial`, returning the parameters of the epoch with the
// lowest development loss.
TrainResult train(ModelParams initial, std::span<const LabeledTree> train_set,
                  std::span<const LabeledTree> dev_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Builds word and tag vocabularies from train_set, initializes from
// config.seed and trains.
TrainResult train(std::span<const LabeledTree> train_set, std::span<const LabeledTree> dev_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Vocabularies over leaf tokens and over all node tags of a tree set.
Vocab word_vocab(std::span<const LabeledTree> data, std::size_t limit);
Vocab tag_vocab(std::span<const LabeledTree> data, std::size_t limit);

}  // namespace preorder
