#include "preorder/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "preorder/error.hpp"

namespace preorder {

ParamId ParamStore::add(std::string name, ParamKind kind, Tensor value) {
  if (find(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  params_.push_back({std::move(name), kind, std::move(value)});
  return static_cast<ParamId>(params_.size() - 1);
}

std::optional<ParamId> ParamStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return static_cast<ParamId>(i);
  return std::nullopt;
}

ParamId ParamStore::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

Gradients::Gradients(const ParamStore& params) {
  slots_.reserve(params.size());
  for (const auto& p : params) {
    Slot s;
    s.rows = p.value.rows();
    s.cols = p.value.cols();
    slots_.push_back(std::move(s));
  }
}

Tensor& Gradients::dense(ParamId id) {
  Slot& s = slots_.at(id);
  if (s.dense.empty() && s.rows * s.cols > 0) s.dense = Tensor(s.rows, s.cols);
  return s.dense;
}

std::span<double> Gradients::table_row(ParamId id, std::size_t row) {
  Slot& s = slots_.at(id);
  if (row >= s.rows) throw std::out_of_range("gradient row out of range");
  auto [it, inserted] = s.rows_sparse.try_emplace(row);
  if (inserted) it->second.assign(s.cols, 0.0);
  return it->second;
}

void Gradients::add(const Gradients& other) {
  if (other.slots_.size() != slots_.size()) throw ShapeError("gradient sets differ in size");
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const Slot& src = other.slots_[i];
    if (!src.dense.empty()) {
      Tensor& dst = dense(static_cast<ParamId>(i));
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src.dense[k];
    }
    for (const auto& [row, values] : src.rows_sparse) {
      auto dst = table_row(static_cast<ParamId>(i), row);
      for (std::size_t k = 0; k < values.size(); ++k) dst[k] += values[k];
    }
  }
}

void Gradients::scale(double k) {
  for (Slot& s : slots_) {
    for (double& v : s.dense.data()) v *= k;
    for (auto& [row, values] : s.rows_sparse)
      for (double& v : values) v *= k;
  }
}

bool Gradients::touched(ParamId id) const {
  const Slot& s = slots_.at(id);
  return !s.dense.empty() || !s.rows_sparse.empty();
}

Tensor Gradients::to_dense(ParamId id) const {
  const Slot& s = slots_.at(id);
  Tensor out = s.dense.empty() ? Tensor(s.rows, s.cols) : s.dense;
  for (const auto& [row, values] : s.rows_sparse)
    for (std::size_t c = 0; c < values.size(); ++c) out(row, c) += values[c];
  return out;
}

double Gradients::squared_norm() const {
  double total = 0.0;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const Slot& s = slots_[i];
    if (!s.dense.empty() && !s.rows_sparse.empty()) {
      for (double v : to_dense(static_cast<ParamId>(i)).data()) total += v * v;
      continue;
    }
    for (double v : s.dense.data()) total += v * v;
    for (const auto& [row, values] : s.rows_sparse)
      for (double v : values) total += v * v;
  }
  return total;
}

std::optional<ParamId> Gradients::first_non_finite() const {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const Slot& s = slots_[i];
    if (!s.dense.all_finite()) return static_cast<ParamId>(i);
    for (const auto& [row, values] : s.rows_sparse)
      for (double v : values)
        if (!std::isfinite(v)) return static_cast<ParamId>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(static_cast<std::uint32_t>(nodes_.size() - 1));
}

const Tape::Node& Tape::node(Var v) const { return nodes_.at(v.index()); }

const Tensor& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.op == Op::kParam ? (*params_)[n.param].value : n.value;
}

const Tensor& Tape::probabilities(Var xent) const {
  const Node& n = node(xent);
  if (n.op != Op::kXent) throw std::invalid_argument("not a softmax_xent node");
  return n.aux;
}

Var Tape::param(ParamId id) {
  (void)(*params_)[id];
  Node n = make_node(Op::kParam);
  n.param = id;
  return push(std::move(n));
}

Var Tape::constant(Tensor value) {
  require_finite(value, "constant");
  Node n = make_node(Op::kConstant, {}, std::move(value));
  return push(std::move(n));
}

Var Tape::embed(ParamId table, std::size_t row) {
  const Tensor& t = (*params_)[table].value;
  if (row >= t.rows())
    throw std::out_of_range("embedding row " + std::to_string(row) + " out of range for " +
                            (*params_)[table].name + " (" + t.shape_string() + ")");
  Tensor out(1, t.cols());
  std::copy(t.row_span(row).begin(), t.row_span(row).end(), out.data().begin());
  Node n = make_node(Op::kEmbed, {}, std::move(out));
  n.param = table;
  n.index = row;
  return push(std::move(n));
}

Var Tape::affine(Var x, Var w, Var b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols())
    throw ShapeError("affine shape mismatch: x " + xv.shape_string() + ", W " + wv.shape_string() +
                     ", b " + bv.shape_string());
  const std::size_t m = wv.cols();
  Tensor out(xv.rows(), m);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double* o = &out(r, 0);
    for (std::size_t j = 0; j < m; ++j) o[j] = bv[j];
    for (std::size_t i = 0; i < xv.cols(); ++i) {
      const double xi = xv(r, i);
      if (xi == 0.0) continue;
      const double* wr = wv.row_span(i).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += xi * wr[j];
    }
  }
  require_finite(out, "affine");
  Node n = make_node(Op::kAffine, {x.index(), w.index(), b.index()}, std::move(out));
  return push(std::move(n));
}

Var Tape::rectifier(Var x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  Node n = make_node(Op::kRectifier, {x.index()}, std::move(out));
  return push(std::move(n));
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat of nothing");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows)
      throw ShapeError("concat row mismatch: " + value(parts[0]).shape_string() + " vs " +
                       value(p).shape_string());
    cols += value(p).cols();
  }
  Tensor out(rows, cols);
  std::vector<std::uint32_t> inputs;
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& v = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, offset + c) = v(r, c);
    offset += v.cols();
    inputs.push_back(p.index());
  }
  Node n = make_node(Op::kConcat, std::move(inputs), std::move(out));
  return push(std::move(n));
}

Var Tape::concat(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat(std::span<const Var>(parts));
}

Var Tape::concat(Var a, Var b, Var c) {
  const Var parts[] = {a, b, c};
  return concat(std::span<const Var>(parts));
}

Var Tape::softmax_xent(Var scores, std::size_t label) {
  const Tensor& s = value(scores);
  if (s.rows() != 1 || label >= s.cols())
    throw ShapeError("softmax_xent expects a 1 x k row and label < k, got " + s.shape_string() +
                     " and label " + std::to_string(label));
  const double mx = *std::max_element(s.data().begin(), s.data().end());
  Tensor probs(1, s.cols());
  double z = 0.0;
  for (std::size_t j = 0; j < s.cols(); ++j) {
    probs[j] = std::exp(s[j] - mx);
    z += probs[j];
  }
  for (double& p : probs.data()) p /= z;
  // -log p(label) = log z - (s_label - max)
  Tensor loss(1, 1, std::log(z) - (s[label] - mx));
  require_finite(loss, "softmax_xent");
  Node n = make_node(Op::kXent, {scores.index()}, std::move(loss));
  n.aux = std::move(probs);
  n.index = label;
  return push(std::move(n));
}

Var Tape::sum(std::span<const Var> scalars) {
  Tensor out(1, 1);
  std::vector<std::uint32_t> inputs;
  for (Var v : scalars) {
    const Tensor& t = value(v);
    if (t.size() != 1) throw ShapeError("sum expects 1x1 inputs, got " + t.shape_string());
    out[0] += t[0];
    inputs.push_back(v.index());
  }
  Node n = make_node(Op::kSum, std::move(inputs), std::move(out));
  return push(std::move(n));
}

Var Tape::scale(Var x, double k) {
  Tensor out = value(x);
  for (double& v : out.data()) v *= k;
  require_finite(out, "scale");
  Node n = make_node(Op::kScale, {x.index()}, std::move(out));
  n.k = k;
  return push(std::move(n));
}

Tensor& Tape::grad_target(std::uint32_t id, std::vector<Tensor>& node_grads, Gradients& grads) {
  const Node& n = nodes_[id];
  if (n.op == Op::kParam) return grads.dense(n.param);
  Tensor& g = node_grads[id];
  if (g.empty()) {
    const Tensor& v = n.value;
    g = Tensor(v.rows(), v.cols());
  }
  return g;
}

void Tape::backward(Var loss, Gradients& grads, std::vector<std::uint32_t>* visit_log) {
  if (value(loss).size() != 1) throw ShapeError("backward needs a scalar loss");
  if (grads.size() != params_->size()) throw ShapeError("gradient set does not match parameters");
  std::vector<Tensor> node_grads(nodes_.size());
  grad_target(loss.index(), node_grads, grads)[0] += 1.0;

  for (std::uint32_t id = loss.index() + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (n.op == Op::kParam || n.op == Op::kConstant) continue;
    if (node_grads[id].empty()) continue;  // not on a path to the loss
    if (visit_log) visit_log->push_back(id);
    const Tensor g = std::move(node_grads[id]);

    switch (n.op) {
      case Op::kEmbed: {
        auto row = grads.table_row(n.param, n.index);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += g[c];
        break;
      }
      case Op::kAffine: {
        const Tensor& x = value(Var(n.inputs[0]));
        const Tensor& w = value(Var(n.inputs[1]));
        const std::size_t m = w.cols();
        const std::size_t k = w.rows();
        if (nodes_[n.inputs[0]].op != Op::kConstant) {
          Tensor& gx = grad_target(n.inputs[0], node_grads, grads);
          for (std::size_t r = 0; r < x.rows(); ++r)
            for (std::size_t i = 0; i < k; ++i) {
              const double* wr = w.row_span(i).data();
              double acc = 0.0;
              for (std::size_t j = 0; j < m; ++j) acc += g(r, j) * wr[j];
              gx(r, i) += acc;
            }
        }
        if (nodes_[n.inputs[1]].op != Op::kConstant) {
          Tensor& gw = grad_target(n.inputs[1], node_grads, grads);
          for (std::size_t r = 0; r < x.rows(); ++r)
            for (std::size_t i = 0; i < k; ++i) {
              const double xi = x(r, i);
              if (xi == 0.0) continue;
              double* gwr = &gw(i, 0);
              for (std::size_t j = 0; j < m; ++j) gwr[j] += xi * g(r, j);
            }
        }
        if (nodes_[n.inputs[2]].op != Op::kConstant) {
          Tensor& gb = grad_target(n.inputs[2], node_grads, grads);
          for (std::size_t r = 0; r < x.rows(); ++r)
            for (std::size_t j = 0; j < m; ++j) gb[j] += g(r, j);
        }
        break;
      }
      case Op::kRectifier: {
        if (nodes_[n.inputs[0]].op == Op::kConstant) break;
        Tensor& gx = grad_target(n.inputs[0], node_grads, grads);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (n.value[i] > 0.0) gx[i] += g[i];
        break;
      }
      case Op::kConcat: {
        std::size_t offset = 0;
        for (std::uint32_t in : n.inputs) {
          const std::size_t cols = value(Var(in)).cols();
          if (nodes_[in].op != Op::kConstant) {
            Tensor& gi = grad_target(in, node_grads, grads);
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t c = 0; c < cols; ++c) gi(r, c) += g(r, offset + c);
          }
          offset += cols;
        }
        break;
      }
      case Op::kXent: {
        if (nodes_[n.inputs[0]].op == Op::kConstant) break;
        Tensor& gs = grad_target(n.inputs[0], node_grads, grads);
        for (std::size_t j = 0; j < n.aux.size(); ++j)
          gs[j] += g[0] * (n.aux[j] - (j == n.index ? 1.0 : 0.0));
        break;
      }
      case Op::kSum: {
        for (std::uint32_t in : n.inputs) {
          if (nodes_[in].op == Op::kConstant) continue;
          grad_target(in, node_grads, grads)[0] += g[0];
        }
        break;
      }
      case Op::kScale: {
        if (nodes_[n.inputs[0]].op == Op::kConstant) break;
        Tensor& gx = grad_target(n.inputs[0], node_grads, grads);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += n.k * g[i];
        break;
      }
      case Op::kParam:
      case Op::kConstant:
        break;
    }
  }
}

}  // namespace preorder
