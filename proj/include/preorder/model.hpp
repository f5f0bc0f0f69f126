#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "preorder/labels.hpp"
#include "preorder/tape.hpp"
#include "preorder/tree.hpp"
#include "preorder/vocab.hpp"

namespace preorder {

struct ModelConfig {
  std::size_t dim = 200;  // hidden width of every node vector
  bool use_tags = false;  // tag-augmented composition
  bool leaf_tags = true;  // with use_tags, also feed POS embeddings to leaves

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Every tensor of the recursive network plus the vocabularies it was built with.
//
//   leaf:      p = relu([e_word (; e_tag)] W_leaf + b_leaf)
//   internal:  p = relu([p_l; p_r] W + b)              (plain)
//              p = relu([p_l; p_r; e_tag] W_t + b_t)   (tags)
//   output:    s = p W_out + b_out, softmax over {Straight, Inverted}
class ModelParams {
 public:
  static constexpr std::uint32_t kFileVersion = 1;

  struct Roles {
    ParamId word_embedding = 0;
    ParamId tag_embedding = 0;  // use_tags only
    ParamId leaf_weight = 0;
    ParamId leaf_bias = 0;
    ParamId compose_weight = 0;  // plain or tag-augmented, per use_tags
    ParamId compose_bias = 0;
    ParamId output_weight = 0;
    ParamId output_bias = 0;

    friend bool operator==(const Roles&, const Roles&) = default;
  };

  // Weights and tables uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
  static ModelParams init(const ModelConfig& config, Vocab words, Vocab tags, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t dim() const noexcept { return config_.dim; }
  bool use_tags() const noexcept { return config_.use_tags; }
  bool leaf_uses_tags() const noexcept { return config_.use_tags && config_.leaf_tags; }
  const Vocab& words() const noexcept { return words_; }
  const Vocab& tags() const noexcept { return tags_; }
  const Roles& roles() const noexcept { return roles_; }
  ParamStore& store() noexcept { return store_; }
  const ParamStore& store() const noexcept { return store_; }

  // Little-endian binary container: magic, version, config, vocabularies,
  // then every tensor as name + shape + row-major payload.
  void save(std::ostream& out) const;
  static ModelParams load(std::istream& in);
  void save_file(const std::filesystem::path& path) const;
  static ModelParams load_file(const std::filesystem::path& path);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  void bind_roles();

  ModelConfig config_;
  Vocab words_;
  Vocab tags_;
  ParamStore store_;
  Roles roles_;
};

// Vocabulary ids for one tree; OOV words and unseen tags map to UNK.
struct EncodedTree {
  std::vector<std::uint32_t> word;  // per node, leaves only
  std::vector<std::uint32_t> tag;   // per node
};
EncodedTree encode(const ModelParams& params, const SyntaxTree& tree);

// Vars for one tree recorded on a tape.
struct TreeGraph {
  std::vector<Var> vectors;  // per node
  std::vector<Var> scores;   // per internal node, pre-order
};
TreeGraph build_graph(Tape& tape, const ModelParams& params, const SyntaxTree& tree);

Var leaf_vector(Tape& tape, const ModelParams& params, std::uint32_t word_id,
                std::uint32_t tag_id = Vocab::kUnkId);
Var compose(Tape& tape, const ModelParams& params, Var left, Var right,
            std::uint32_t tag_id = Vocab::kUnkId);

struct NodePrediction {
  std::vector<std::array<double, 2>> probabilities;  // per internal node: {Straight, Inverted}
  std::vector<Tensor> vectors;                       // per node
};

NodePrediction forward(const ModelParams& params, const SyntaxTree& tree);

// Inverted iff p(Inverted) > 0.5.
NodeLabelSet predict_labels(const ModelParams& params, const SyntaxTree& tree);

struct LabeledTree {
  SyntaxTree tree;
  NodeLabelSet labels;
};

struct BatchResult {
  double loss = 0.0;  // sum of node cross entropies / number of trees
  Gradients gradients;
};

// Mean over trees of summed per-node cross entropy, with gradients. Trees
// may be processed on `threads` workers; results are reduced in batch order.
BatchResult batch_loss(const ModelParams& params, std::span<const LabeledTree* const> batch,
                       std::size_t threads = 1);
BatchResult batch_loss(const ModelParams& params, std::span<const LabeledTree> batch,
                       std::size_t threads = 1);

// Summed node cross entropy of one tree, without gradients.
double tree_loss(const ModelParams& params, const LabeledTree& example);

}  // namespace preorder
