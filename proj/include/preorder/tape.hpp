#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "preorder/tensor.hpp"

namespace preorder {

using ParamId = std::uint32_t;

// Weights take weight decay; biases and embedding tables do not. Tables
// receive sparse row gradients.
enum class ParamKind : std::uint8_t { kWeight, kBias, kTable };

struct Parameter {
  std::string name;
  ParamKind kind = ParamKind::kWeight;
  Tensor value;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

class ParamStore {
 public:
  ParamId add(std::string name, ParamKind kind, Tensor value);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](ParamId id) { return params_.at(id); }
  const Parameter& operator[](ParamId id) const { return params_.at(id); }
  std::optional<ParamId> find(std::string_view name) const;
  ParamId id(std::string_view name) const;  // throws std::out_of_range

  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::vector<Parameter> params_;
};

// Gradient accumulator shaped like a ParamStore. Dense slots are allocated on
// first touch; table rows are kept sparse until densified.
class Gradients {
 public:
  explicit Gradients(const ParamStore& params);

  std::size_t size() const noexcept { return slots_.size(); }
  Tensor& dense(ParamId id);
  std::span<double> table_row(ParamId id, std::size_t row);

  // Adds every slot of `other` in parameter order.
  void add(const Gradients& other);
  void scale(double k);

  bool touched(ParamId id) const;
  Tensor to_dense(ParamId id) const;
  double squared_norm() const;
  // Name of the first parameter holding a non-finite entry, if any.
  std::optional<ParamId> first_non_finite() const;

 private:
  struct Slot {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Tensor dense;
    std::map<std::size_t, std::vector<double>> rows_sparse;
  };
  std::vector<Slot> slots_;
};

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  std::uint32_t index() const noexcept { return index_; }

 private:
  friend class Tape;
  explicit Var(std::uint32_t i) : index_(i) {}
  std::uint32_t index_ = 0;
};

// Records primitive operations for one computation and replays them in
// reverse to accumulate parameter gradients. Parameters are read in place
// from the ParamStore, which must outlive the tape and stay unchanged.
class Tape {
 public:
  explicit Tape(const ParamStore& params) : params_(&params) {}

  Var param(ParamId id);
  Var constant(Tensor value);
  // Row `row` of a table parameter as a 1 x cols vector.
  Var embed(ParamId table, std::size_t row);
  // x W + b, with b broadcast over the rows of x.
  Var affine(Var x, Var w, Var b);
  // max(0, x); the subgradient at exactly 0 is 0.
  Var rectifier(Var x);
  // Column-wise concatenation.
  Var concat(std::span<const Var> parts);
  Var concat(Var a, Var b);
  Var concat(Var a, Var b, Var c);
  // 1 x 1 loss -log softmax(s)[label] for a 1 x k score row.
  Var softmax_xent(Var scores, std::size_t label);
  Var sum(std::span<const Var> scalars);
  Var scale(Var x, double k);

  const Tensor& value(Var v) const;
  // Softmax probabilities computed by a softmax_xent node.
  const Tensor& probabilities(Var xent) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and accumulates into `grads`. `visit_log`, if
  // given, receives node indices in the order they are processed.
  void backward(Var loss, Gradients& grads, std::vector<std::uint32_t>* visit_log = nullptr);

 private:
  enum class Op : std::uint8_t { kParam, kConstant, kEmbed, kAffine, kRectifier, kConcat, kXent, kSum, kScale };

  struct Node {
    Op op = Op::kConstant;
    std::vector<std::uint32_t> inputs;
    Tensor value;  // unused for kParam
    Tensor aux;    // softmax probabilities for kXent
    ParamId param = 0;
    std::size_t index = 0;  // embed row or xent label
    double k = 0.0;
  };

  static Node make_node(Op op, std::vector<std::uint32_t> inputs = {}, Tensor value = {}) {
    Node n;
    n.op = op;
    n.inputs = std::move(inputs);
    n.value = std::move(value);
    return n;
  }
  Var push(Node node);
  const Node& node(Var v) const;
  Tensor& grad_target(std::uint32_t id, std::vector<Tensor>& node_grads, Gradients& grads);

  const ParamStore* params_;
  std::vector<Node> nodes_;
};

}  // namespace preorder
