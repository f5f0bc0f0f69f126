#include "preorder/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "preorder/corpus.hpp"
#include "preorder/error.hpp"
#include "parallel.hpp"

namespace preorder {

namespace {

constexpr char kMagic[8] = {'R', 'V', 'N', 'N', 'P', 'R', 'E', '\0'};

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  for (double& v : t.data()) v = (2.0 * uniform01(rng) - 1.0) * limit;
  return t;
}

// --- little-endian binary helpers ---

void put_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}
void put_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}
void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t get_uint(std::istream& in, int bytes) {
  char buf[8];
  if (!in.read(buf, bytes)) throw DataError("model file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}
std::uint32_t get_u32(std::istream& in) { return static_cast<std::uint32_t>(get_uint(in, 4)); }
std::uint64_t get_u64(std::istream& in) { return get_uint(in, 8); }
std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw DataError("model file truncated");
  return s;
}

void put_vocab(std::ostream& out, const Vocab& v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (const auto& e : v.entries()) put_string(out, e);
}
Vocab get_vocab(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::vector<std::string> entries;
  entries.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) entries.push_back(get_string(in));
  return Vocab::from_entries(std::move(entries));
}

struct Names {
  static constexpr const char* kWordEmbedding = "word_embedding";
  static constexpr const char* kTagEmbedding = "tag_embedding";
  static constexpr const char* kLeafWeight = "leaf_weight";
  static constexpr const char* kLeafBias = "leaf_bias";
  static constexpr const char* kComposeWeight = "compose_weight";
  static constexpr const char* kComposeBias = "compose_bias";
  static constexpr const char* kTagComposeWeight = "tag_compose_weight";
  static constexpr const char* kTagComposeBias = "tag_compose_bias";
  static constexpr const char* kOutputWeight = "output_weight";
  static constexpr const char* kOutputBias = "output_bias";
};

std::array<double, 2> softmax2(const Tensor& s) {
  const double mx = std::max(s[0], s[1]);
  const double a = std::exp(s[0] - mx);
  const double b = std::exp(s[1] - mx);
  return {a / (a + b), b / (a + b)};
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, Vocab words, Vocab tags,
                              std::uint64_t seed) {
  if (config.dim < 1) throw ConfigError("model dimension must be >= 1");
  const std::size_t d = config.dim;
  const bool leaf_tags = config.use_tags && config.leaf_tags;
  std::mt19937_64 rng(seed);

  ModelParams m;
  m.config_ = config;
  m.words_ = std::move(words);
  m.tags_ = std::move(tags);
  auto& s = m.store_;
  s.add(Names::kWordEmbedding, ParamKind::kTable, glorot(m.words_.size(), d, rng));
  if (config.use_tags) s.add(Names::kTagEmbedding, ParamKind::kTable, glorot(m.tags_.size(), d, rng));
  s.add(Names::kLeafWeight, ParamKind::kWeight, glorot(leaf_tags ? 2 * d : d, d, rng));
  s.add(Names::kLeafBias, ParamKind::kBias, Tensor(1, d));
  if (config.use_tags) {
    s.add(Names::kTagComposeWeight, ParamKind::kWeight, glorot(3 * d, d, rng));
    s.add(Names::kTagComposeBias, ParamKind::kBias, Tensor(1, d));
  } else {
    s.add(Names::kComposeWeight, ParamKind::kWeight, glorot(2 * d, d, rng));
    s.add(Names::kComposeBias, ParamKind::kBias, Tensor(1, d));
  }
  s.add(Names::kOutputWeight, ParamKind::kWeight, glorot(d, 2, rng));
  s.add(Names::kOutputBias, ParamKind::kBias, Tensor(1, 2));
  m.bind_roles();
  return m;
}

void ModelParams::bind_roles() {
  const std::size_t d = config_.dim;
  auto expect = [&](const char* name, std::size_t rows, std::size_t cols) {
    const auto id = store_.find(name);
    if (!id) throw DataError(std::string("model is missing tensor '") + name + "'");
    const Tensor& t = store_[*id].value;
    if (t.rows() != rows || t.cols() != cols)
      throw DataError(std::string("tensor '") + name + "' has shape " + t.shape_string() +
                      ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    return *id;
  };
  roles_.word_embedding = expect(Names::kWordEmbedding, words_.size(), d);
  if (config_.use_tags) roles_.tag_embedding = expect(Names::kTagEmbedding, tags_.size(), d);
  roles_.leaf_weight = expect(Names::kLeafWeight, leaf_uses_tags() ? 2 * d : d, d);
  roles_.leaf_bias = expect(Names::kLeafBias, 1, d);
  if (config_.use_tags) {
    roles_.compose_weight = expect(Names::kTagComposeWeight, 3 * d, d);
    roles_.compose_bias = expect(Names::kTagComposeBias, 1, d);
  } else {
    roles_.compose_weight = expect(Names::kComposeWeight, 2 * d, d);
    roles_.compose_bias = expect(Names::kComposeBias, 1, d);
  }
  roles_.output_weight = expect(Names::kOutputWeight, d, 2);
  roles_.output_bias = expect(Names::kOutputBias, 1, 2);
  const std::size_t expected_count = config_.use_tags ? 8 : 7;
  if (store_.size() != expected_count) throw DataError("model holds unexpected tensors");
}

void ModelParams::save(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kFileVersion);
  put_u64(out, config_.dim);
  put_u32(out, config_.use_tags ? 1 : 0);
  put_u32(out, config_.leaf_tags ? 1 : 0);
  put_vocab(out, words_);
  put_vocab(out, tags_);
  put_u32(out, static_cast<std::uint32_t>(store_.size()));
  for (const auto& p : store_) {
    put_string(out, p.name);
    put_u32(out, static_cast<std::uint32_t>(p.kind));
    put_u64(out, p.value.rows());
    put_u64(out, p.value.cols());
    for (double v : p.value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw DataError("failed to write model");
}

ModelParams ModelParams::load(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic))
    throw DataError("not a preorder model file");
  const std::uint32_t version = get_u32(in);
  if (version != kFileVersion)
    throw DataError("unsupported model file version " + std::to_string(version) + " (expected " +
                    std::to_string(kFileVersion) + ")");
  ModelParams m;
  m.config_.dim = get_u64(in);
  m.config_.use_tags = get_u32(in) != 0;
  m.config_.leaf_tags = get_u32(in) != 0;
  m.words_ = get_vocab(in);
  m.tags_ = get_vocab(in);
  const std::uint32_t count = get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_string(in);
    const auto kind = get_u32(in);
    if (kind > static_cast<std::uint32_t>(ParamKind::kTable))
      throw DataError("tensor '" + name + "' has unknown kind");
    const std::uint64_t rows = get_u64(in);
    const std::uint64_t cols = get_u64(in);
    if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols)
      throw DataError("tensor '" + name + "' is implausibly large");
    std::vector<double> data(rows * cols);
    for (double& v : data) v = std::bit_cast<double>(get_u64(in));
    m.store_.add(std::move(name), static_cast<ParamKind>(kind), Tensor(rows, cols, std::move(data)));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in model file");
  m.bind_roles();
  return m;
}

void ModelParams::save_file(const std::filesystem::path& path) const {
  std::ostringstream out;
  save(out);
  write_file_atomic(path, out.str());
}

ModelParams ModelParams::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  return load(in);
}

// ---------------------------------------------------------------------------

EncodedTree encode(const ModelParams& params, const SyntaxTree& tree) {
  EncodedTree e;
  e.word.assign(tree.size(), Vocab::kUnkId);
  e.tag.assign(tree.size(), Vocab::kUnkId);
  for (NodeId id = 0; id < tree.size(); ++id) {
    const TreeNode& n = tree.node(id);
    if (n.is_leaf()) e.word[id] = params.words().id(n.token);
    e.tag[id] = params.tags().id(n.tag);
  }
  return e;
}

Var leaf_vector(Tape& tape, const ModelParams& params, std::uint32_t word_id, std::uint32_t tag_id) {
  const auto& r = params.roles();
  Var x = tape.embed(r.word_embedding, word_id);
  if (params.leaf_uses_tags()) x = tape.concat(x, tape.embed(r.tag_embedding, tag_id));
  return tape.rectifier(tape.affine(x, tape.param(r.leaf_weight), tape.param(r.leaf_bias)));
}

Var compose(Tape& tape, const ModelParams& params, Var left, Var right, std::uint32_t tag_id) {
  const auto& r = params.roles();
  const Var x = params.use_tags() ? tape.concat(left, right, tape.embed(r.tag_embedding, tag_id))
                                  : tape.concat(left, right);
  return tape.rectifier(tape.affine(x, tape.param(r.compose_weight), tape.param(r.compose_bias)));
}

TreeGraph build_graph(Tape& tape, const ModelParams& params, const SyntaxTree& tree) {
  const EncodedTree ids = encode(params, tree);
  const auto& r = params.roles();
  TreeGraph g;
  g.vectors.resize(tree.size());
  // Pre-order ids: a reverse sweep sees children before parents.
  for (NodeId id = static_cast<NodeId>(tree.size()); id-- > 0;) {
    const TreeNode& n = tree.node(id);
    g.vectors[id] = n.is_leaf() ? leaf_vector(tape, params, ids.word[id], ids.tag[id])
                                : compose(tape, params, g.vectors[n.left], g.vectors[n.right], ids.tag[id]);
  }
  const Var w_out = tape.param(r.output_weight);
  const Var b_out = tape.param(r.output_bias);
  g.scores.reserve(tree.num_internal());
  for (NodeId id : tree.internal_nodes()) g.scores.push_back(tape.affine(g.vectors[id], w_out, b_out));
  return g;
}

NodePrediction forward(const ModelParams& params, const SyntaxTree& tree) {
  Tape tape(params.store());
  const TreeGraph g = build_graph(tape, params, tree);
  NodePrediction out;
  out.vectors.reserve(tree.size());
  for (Var v : g.vectors) out.vectors.push_back(tape.value(v));
  out.probabilities.reserve(g.scores.size());
  for (Var s : g.scores) out.probabilities.push_back(softmax2(tape.value(s)));
  return out;
}

NodeLabelSet predict_labels(const ModelParams& params, const SyntaxTree& tree) {
  const NodePrediction p = forward(params, tree);
  NodeLabelSet labels;
  labels.labels.reserve(p.probabilities.size());
  for (const auto& pr : p.probabilities)
    labels.labels.push_back(pr[1] > 0.5 ? Label::kInverted : Label::kStraight);
  return labels;
}

namespace {

struct TreeResult {
  double loss = 0.0;
  std::optional<Gradients> gradients;
};

TreeResult tree_loss_and_grad(const ModelParams& params, const LabeledTree& ex, bool want_grad) {
  check_covers(ex.labels, ex.tree);
  TreeResult out;
  if (ex.tree.num_internal() == 0) return out;
  Tape tape(params.store());
  const TreeGraph g = build_graph(tape, params, ex.tree);
  std::vector<Var> terms;
  terms.reserve(g.scores.size());
  for (std::size_t k = 0; k < g.scores.size(); ++k)
    terms.push_back(tape.softmax_xent(g.scores[k], static_cast<std::size_t>(ex.labels.labels[k])));
  const Var total = tape.sum(terms);
  out.loss = tape.value(total)[0];
  if (want_grad) {
    out.gradients.emplace(params.store());
    tape.backward(total, *out.gradients);
  }
  return out;
}

}  // namespace

double tree_loss(const ModelParams& params, const LabeledTree& example) {
  return tree_loss_and_grad(params, example, false).loss;
}

BatchResult batch_loss(const ModelParams& params, std::span<const LabeledTree* const> batch,
                       std::size_t threads) {
  BatchResult result{0.0, Gradients(params.store())};
  if (batch.empty()) return result;
  threads = std::max<std::size_t>(threads, 1);

  // Trees are evaluated in waves; each wave is folded in batch order, so the
  // sum does not depend on the thread count.
  constexpr std::size_t kPerWorker = 4;
  const std::size_t wave = threads * kPerWorker;
  double total = 0.0;
  for (std::size_t start = 0; start < batch.size(); start += wave) {
    const std::size_t stop = std::min(batch.size(), start + wave);
    std::vector<TreeResult> results(stop - start);
    detail::parallel_for(results.size(), threads, [&](std::size_t i) {
      results[i] = tree_loss_and_grad(params, *batch[start + i], true);
    });
    for (auto& r : results) {
      total += r.loss;
      if (r.gradients) result.gradients.add(*r.gradients);
    }
  }
  const double inv_k = 1.0 / static_cast<double>(batch.size());
  result.loss = total * inv_k;
  result.gradients.scale(inv_k);
  return result;
}

BatchResult batch_loss(const ModelParams& params, std::span<const LabeledTree> batch,
                       std::size_t threads) {
  std::vector<const LabeledTree*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return batch_loss(params, std::span<const LabeledTree* const>(ptrs), threads);
}

}  // namespace preorder
