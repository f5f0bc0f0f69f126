#include "preorder/trainer.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include <json.hpp>

#include "preorder/error.hpp"
#include "parallel.hpp"

namespace preorder {

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  };
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (max_epochs < 1) throw ConfigError("epochs must be >= 1");
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (vocab_size < 1) throw ConfigError("vocab size must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  positive(learning_rate, "learning rate");
  positive(adam_beta1, "beta1");
  positive(adam_beta2, "beta2");
  positive(adam_eps, "eps");
  positive(clip_norm, "clip norm");
  if (adam_beta1 >= 1.0 || adam_beta2 >= 1.0) throw ConfigError("Adam betas must be < 1");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw ConfigError("weight decay must be non-negative");
}

std::string TrainReport::to_jsonl(bool include_timing) const {
  std::string out;
  out += nlohmann::json{{"initial_dev_loss", initial_dev_loss}}.dump() + "\n";
  for (const auto& e : epochs) {
    nlohmann::json line{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_loss", e.dev_loss}};
    if (include_timing) line["seconds"] = e.seconds;
    out += line.dump() + "\n";
  }
  out += nlohmann::json{{"selected_epoch", selected_epoch}}.dump() + "\n";
  return out;
}

AdamState::AdamState(const ParamStore& params) {
  for (const auto& p : params) {
    first.emplace_back(p.value.rows(), p.value.cols());
    second.emplace_back(p.value.rows(), p.value.cols());
  }
}

double adam_step(ParamStore& params, Gradients& grads, AdamState& state, const TrainConfig& config) {
  if (grads.size() != params.size() || state.first.size() != params.size())
    throw ShapeError("optimizer state does not match parameters");
  if (auto bad = grads.first_non_finite())
    throw NumericError("non-finite gradient in parameter '" + params[*bad].name + "'");

  const double decay = config.weight_decay;
  if (!config.decoupled_decay && decay != 0.0) {
    for (ParamId id = 0; id < params.size(); ++id) {
      if (params[id].kind != ParamKind::kWeight) continue;
      Tensor& g = grads.dense(id);
      const Tensor& w = params[id].value;
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += decay * w[k];
    }
  }

  const double norm = std::sqrt(grads.squared_norm());
  const double clip = norm > config.clip_norm ? config.clip_norm / norm : 1.0;

  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = config.learning_rate;

  for (ParamId id = 0; id < params.size(); ++id) {
    Tensor& w = params[id].value;
    Tensor& m = state.first[id];
    Tensor& v = state.second[id];
    const Tensor g = grads.to_dense(id);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k] * clip;
      m[k] = b1 * m[k] + (1.0 - b1) * gk;
      v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      w[k] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
    if (config.decoupled_decay && decay != 0.0 && params[id].kind == ParamKind::kWeight) {
      for (double& x : w.data()) x -= lr * decay * x;
    }
    if (!w.all_finite()) throw NumericError("non-finite value in parameter '" + params[id].name + "' after update");
  }
  return norm;
}

double evaluate_loss(const ModelParams& params, std::span<const LabeledTree> dataset,
                     std::size_t threads) {
  if (dataset.empty()) return 0.0;
  std::vector<double> losses(dataset.size());
  detail::parallel_for(dataset.size(), threads,
                       [&](std::size_t i) { losses[i] = tree_loss(params, dataset[i]); });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(dataset.size());
}

std::size_t select_best_epoch(std::span<const double> dev_losses) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < dev_losses.size(); ++i)
    if (best == 0 || dev_losses[i] < dev_losses[best - 1]) best = i + 1;
  return best;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Fisher-Yates; std::shuffle is not specified bit-for-bit across libraries.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

TrainResult train(ModelParams initial, std::span<const LabeledTree> train_set,
                  std::span<const LabeledTree> dev_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  if (dev_set.empty()) throw DataError("development set is empty");

  ModelParams params = std::move(initial);
  AdamState state(params.store());
  TrainResult result{params, {}};
  result.report.initial_dev_loss = evaluate_loss(params, dev_set, config.threads);
  double best_dev = 0.0;

  std::vector<const LabeledTree*> batch;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto order = epoch_order(train_set.size(), config.seed, epoch);
    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&train_set[order[i]]);
      BatchResult br = batch_loss(params, batch, config.threads);
      weighted_loss += br.loss * static_cast<double>(batch.size());
      adam_step(params.store(), br.gradients, state, config);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = weighted_loss / static_cast<double>(train_set.size());
    record.dev_loss = evaluate_loss(params, dev_set, config.threads);
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!std::isfinite(record.train_loss) || !std::isfinite(record.dev_loss))
      throw NumericError("loss became non-finite in epoch " + std::to_string(epoch));
    result.report.epochs.push_back(record);

    if (result.report.selected_epoch == 0 || record.dev_loss < best_dev) {
      best_dev = record.dev_loss;
      result.report.selected_epoch = epoch;
      result.best = params;
    }
    if (on_epoch) on_epoch(record, params);
  }
  return result;
}

Vocab word_vocab(std::span<const LabeledTree> data, std::size_t limit) {
  VocabBuilder builder;
  for (const auto& ex : data)
    for (NodeId id : ex.tree.leaves()) builder.add(ex.tree.node(id).token);
  return builder.build(limit);
}

Vocab tag_vocab(std::span<const LabeledTree> data, std::size_t limit) {
  VocabBuilder builder;
  for (const auto& ex : data)
    for (const auto& n : ex.tree.nodes()) builder.add(n.tag);
  return builder.build(limit);
}

TrainResult train(std::span<const LabeledTree> train_set, std::span<const LabeledTree> dev_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  ModelConfig mc{config.dim, config.use_tags, config.leaf_tags};
  ModelParams initial = ModelParams::init(mc, word_vocab(train_set, config.vocab_size),
                                          tag_vocab(train_set, config.vocab_size), config.seed);
  return train(std::move(initial), train_set, dev_set, config, on_epoch);
}

}  // namespace preorder
