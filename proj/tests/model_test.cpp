#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "preorder/error.hpp"
#include "preorder/model.hpp"
#include "preorder/oracle.hpp"
#include "test_util.hpp"

using namespace preorder;

namespace {

Vocab words_of(std::initializer_list<std::string> ws) {
  std::vector<std::string> e{std::string(Vocab::kUnk)};
  e.insert(e.end(), ws.begin(), ws.end());
  return Vocab::from_entries(e);
}

ModelParams small_model(std::size_t dim, bool tags, std::uint64_t seed = 1, bool leaf_tags = true) {
  return ModelParams::init({dim, tags, leaf_tags}, words_of({"a", "b", "c", "d", "My", "parents", "live", "in", "London"}),
                           words_of({"X", "Y", "Z", "NN", "VB", "S", "NP", "VP", "PP"}), seed);
}

Tensor& tensor(ModelParams& m, ParamId id) { return m.store()[id].value; }

// Independent reference: explicit forward pass and recursive chain rule over
// the tree, with plain loops.
struct Reference {
  const ModelParams& m;
  const SyntaxTree& t;
  const NodeLabelSet& gold;
  std::vector<std::vector<double>> x, z, p;
  std::map<ParamId, Tensor> grad;

  const Tensor& W(ParamId id) const { return m.store()[id].value; }

  std::vector<double> affine(const std::vector<double>& in, ParamId w, ParamId b) const {
    std::vector<double> out(W(w).cols());
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] = W(b)[j];
      for (std::size_t i = 0; i < in.size(); ++i) out[j] += in[i] * W(w)(i, j);
    }
    return out;
  }

  Tensor& g(ParamId id) {
    auto it = grad.find(id);
    if (it == grad.end()) it = grad.emplace(id, Tensor(W(id).rows(), W(id).cols())).first;
    return it->second;
  }

  void forward_node(NodeId id) {
    const auto& r = m.roles();
    const TreeNode& n = t.node(id);
    std::vector<double> in;
    if (n.is_leaf()) {
      const auto row = W(r.word_embedding).row_span(m.words().id(n.token));
      in.assign(row.begin(), row.end());
      if (m.leaf_uses_tags()) {
        const auto tr = W(r.tag_embedding).row_span(m.tags().id(n.tag));
        in.insert(in.end(), tr.begin(), tr.end());
      }
      z[id] = affine(in, r.leaf_weight, r.leaf_bias);
    } else {
      forward_node(n.left);
      forward_node(n.right);
      in = p[n.left];
      in.insert(in.end(), p[n.right].begin(), p[n.right].end());
      if (m.use_tags()) {
        const auto tr = W(r.tag_embedding).row_span(m.tags().id(n.tag));
        in.insert(in.end(), tr.begin(), tr.end());
      }
      z[id] = affine(in, r.compose_weight, r.compose_bias);
    }
    x[id] = in;
    p[id] = z[id];
    for (double& v : p[id]) v = std::max(v, 0.0);
  }

  // d loss / d p at an internal node through its own output layer.
  std::vector<double> output_grad(NodeId id, double& loss) {
    const auto& r = m.roles();
    if (t.node(id).is_leaf()) return std::vector<double>(m.dim(), 0.0);
    const auto s = affine(p[id], r.output_weight, r.output_bias);
    const double mx = std::max(s[0], s[1]);
    const double e0 = std::exp(s[0] - mx), e1 = std::exp(s[1] - mx);
    const double probs[2] = {e0 / (e0 + e1), e1 / (e0 + e1)};
    const auto label = static_cast<std::size_t>(gold.at(t, id));
    loss += -std::log(probs[label]);
    double gs[2] = {probs[0] - (label == 0), probs[1] - (label == 1)};
    for (std::size_t i = 0; i < m.dim(); ++i)
      for (std::size_t j = 0; j < 2; ++j) g(r.output_weight)(i, j) += p[id][i] * gs[j];
    for (std::size_t j = 0; j < 2; ++j) g(r.output_bias)[j] += gs[j];
    std::vector<double> gp(m.dim());
    for (std::size_t i = 0; i < m.dim(); ++i) gp[i] = W(r.output_weight)(i, 0) * gs[0] + W(r.output_weight)(i, 1) * gs[1];
    return gp;
  }

  void backprop(NodeId id, const std::vector<double>& gp, double& loss) {
    const auto& r = m.roles();
    const TreeNode& n = t.node(id);
    const std::size_t d = m.dim();
    std::vector<double> gz(d);
    for (std::size_t j = 0; j < d; ++j) gz[j] = z[id][j] > 0.0 ? gp[j] : 0.0;
    const ParamId w = n.is_leaf() ? r.leaf_weight : r.compose_weight;
    const ParamId b = n.is_leaf() ? r.leaf_bias : r.compose_bias;
    std::vector<double> gx(x[id].size(), 0.0);
    for (std::size_t i = 0; i < x[id].size(); ++i)
      for (std::size_t j = 0; j < d; ++j) {
        g(w)(i, j) += x[id][i] * gz[j];
        gx[i] += W(w)(i, j) * gz[j];
      }
    for (std::size_t j = 0; j < d; ++j) g(b)[j] += gz[j];

    if (n.is_leaf()) {
      const auto wid = m.words().id(n.token);
      for (std::size_t j = 0; j < d; ++j) g(r.word_embedding)(wid, j) += gx[j];
      if (m.leaf_uses_tags())
        for (std::size_t j = 0; j < d; ++j) g(r.tag_embedding)(m.tags().id(n.tag), j) += gx[d + j];
      return;
    }
    if (m.use_tags())
      for (std::size_t j = 0; j < d; ++j) g(r.tag_embedding)(m.tags().id(n.tag), j) += gx[2 * d + j];
    for (const auto [child, offset] : {std::pair{n.left, std::size_t{0}}, std::pair{n.right, d}}) {
      std::vector<double> gc = output_grad(child, loss);
      for (std::size_t j = 0; j < d; ++j) gc[j] += gx[offset + j];
      backprop(child, gc, loss);
    }
  }

  double run() {
    x.assign(t.size(), {});
    z.assign(t.size(), {});
    p.assign(t.size(), {});
    forward_node(t.root());
    double loss = 0.0;
    backprop(t.root(), output_grad(t.root(), loss), loss);
    return loss;
  }
};

// Serialized subtree for every node id.
std::vector<std::string> subtree_strings(const SyntaxTree& t) {
  std::vector<std::string> out(t.size());
  for (NodeId id = static_cast<NodeId>(t.size()); id-- > 0;) {
    const TreeNode& n = t.node(id);
    out[id] = n.is_leaf() ? "(" + n.tag + " " + n.token + ")" : "(" + n.tag + " " + out[n.left] + " " + out[n.right] + ")";
  }
  return out;
}

}  // namespace

TEST_CASE("init_params") {
  const ModelParams a = small_model(5, true, 3);
  const ModelParams b = small_model(5, true, 3);
  const ModelParams c = small_model(5, true, 4);
  CHECK(a == b);
  double max_delta = 0.0;
  for (ParamId id = 0; id < a.store().size(); ++id) {
    const auto& pa = a.store()[id];
    if (pa.kind == ParamKind::kBias) CHECK(pa.value == Tensor(pa.value.rows(), pa.value.cols()));
    for (std::size_t k = 0; k < pa.value.size(); ++k)
      max_delta = std::max(max_delta, std::abs(pa.value[k] - c.store()[id].value[k]));
    if (pa.kind != ParamKind::kBias) {
      const double limit = std::sqrt(6.0 / static_cast<double>(pa.value.rows() + pa.value.cols()));
      for (double v : pa.value.data()) CHECK(std::abs(v) <= limit);
    }
  }
  CHECK(max_delta > 0.0);

  const auto& r = a.roles();
  CHECK(a.store()[r.compose_weight].value.rows() == 15);
  CHECK(a.store()[r.leaf_weight].value.rows() == 10);
  CHECK(a.store()[r.output_bias].value.cols() == 2);
  CHECK(small_model(5, false).store()[small_model(5, false).roles().compose_weight].value.rows() == 10);
  CHECK(small_model(5, true, 1, false).store()[small_model(5, true, 1, false).roles().leaf_weight].value.rows() == 5);
}

TEST_CASE("leaf_vector") {
  ModelParams m = small_model(2, false);
  const auto& r = m.roles();
  SUBCASE("zero embedding row yields rectified bias") {
    tensor(m, r.word_embedding)(1, 0) = 0.0;
    tensor(m, r.word_embedding)(1, 1) = 0.0;
    tensor(m, r.leaf_bias) = Tensor::row({0.7, -0.2});
    Tape tape(m.store());
    CHECK(tape.value(leaf_vector(tape, m, 1)) == Tensor::row({0.7, 0.0}));
  }
  SUBCASE("all-negative pre-activation") {
    tensor(m, r.leaf_weight).fill(0.0);
    tensor(m, r.leaf_bias) = Tensor::row({-1.0, -0.5});
    Tape tape(m.store());
    CHECK(tape.value(leaf_vector(tape, m, 2)) == Tensor::row({0.0, 0.0}));
  }
  SUBCASE("hand-computed 2x2 case") {
    tensor(m, r.word_embedding)(3, 0) = 1.0;
    tensor(m, r.word_embedding)(3, 1) = 2.0;
    tensor(m, r.leaf_weight) = Tensor(2, 2, {1.0, -1.0, 0.5, 1.0});
    tensor(m, r.leaf_bias) = Tensor::row({0.1, -3.0});
    Tape tape(m.store());
    // [1 2] W = [2, 1]; + b = [2.1, -2]
    const Tensor& v = tape.value(leaf_vector(tape, m, 3));
    CHECK(v[0] == doctest::Approx(2.1).epsilon(1e-15));
    CHECK(v[1] == 0.0);
  }
  SUBCASE("out-of-range id") {
    Tape tape(m.store());
    CHECK_THROWS_AS(leaf_vector(tape, m, 99), std::out_of_range);
  }
}

TEST_CASE("compose") {
  SUBCASE("lambda 1 hand case") {
    ModelParams m = small_model(1, false);
    tensor(m, m.roles().compose_weight) = Tensor(2, 1, {1.0, 1.0});
    tensor(m, m.roles().compose_bias) = Tensor(1, 1, -2.0);
    Tape tape(m.store());
    const Var out = compose(tape, m, tape.constant(Tensor(1, 1, 1.0)), tape.constant(Tensor(1, 1, 2.0)));
    CHECK(tape.value(out)[0] == 1.0);
  }
  SUBCASE("zero children, tag and bias") {
    ModelParams m = small_model(3, true);
    tensor(m, m.roles().tag_embedding).fill(0.0);
    Tape tape(m.store());
    const Var out = compose(tape, m, tape.constant(Tensor(1, 3)), tape.constant(Tensor(1, 3)), 2);
    CHECK(tape.value(out) == Tensor(1, 3));
  }
  SUBCASE("output width is lambda") {
    for (std::size_t d : {1, 4, 7}) {
      for (bool tags : {false, true}) {
        ModelParams m = small_model(d, tags);
        Tape tape(m.store());
        const Var out = compose(tape, m, tape.constant(Tensor(1, d, 0.3)), tape.constant(Tensor(1, d, -0.1)), 1);
        CHECK(tape.value(out).cols() == d);
      }
    }
  }
  SUBCASE("shape mismatch") {
    ModelParams m = small_model(3, false);
    Tape tape(m.store());
    CHECK_THROWS_AS(compose(tape, m, tape.constant(Tensor(1, 2)), tape.constant(Tensor(1, 3))), ShapeError);
  }
}

TEST_CASE("forward") {
  for (bool tags : {false, true}) {
    const ModelParams m = small_model(6, tags);
    CHECK(forward(m, parse_tree("(NN a)")).probabilities.empty());
    const NodePrediction p = forward(m, parse_tree(testutil::kExampleTree));
    CHECK(p.probabilities.size() == 4);
    CHECK(p.vectors.size() == 9);
    for (const auto& pr : p.probabilities) CHECK(std::abs(pr[0] + pr[1] - 1.0) <= 1e-12);
    // deterministic
    CHECK(forward(m, parse_tree(testutil::kExampleTree)).probabilities == p.probabilities);
  }
}

TEST_CASE("zero output layer predicts all Straight") {
  ModelParams m = small_model(4, true);
  tensor(m, m.roles().output_weight).fill(0.0);
  const SyntaxTree t = parse_tree(testutil::kExampleTree);
  for (const auto& pr : forward(m, t).probabilities) CHECK(pr == std::array<double, 2>{0.5, 0.5});
  CHECK(format_labels(predict_labels(m, t)) == "S S S S");
}

TEST_CASE("batch_loss basics") {
  ModelParams m = small_model(4, false);
  SUBCASE("single-leaf tree") {
    const std::vector<LabeledTree> batch{{parse_tree("(NN a)"), {}}};
    const BatchResult r = batch_loss(m, batch);
    CHECK(r.loss == 0.0);
    CHECK(r.gradients.squared_norm() == 0.0);
  }
  SUBCASE("single node at p = 0.5") {
    tensor(m, m.roles().output_weight).fill(0.0);
    const std::vector<LabeledTree> batch{{parse_tree("(X (NN a) (NN b))"), parse_labels("I")}};
    CHECK(batch_loss(m, batch).loss == std::log(2.0));
  }
  SUBCASE("missing label") {
    const std::vector<LabeledTree> batch{{parse_tree("(X (NN a) (NN b))"), {}}};
    CHECK_THROWS_AS(batch_loss(m, batch), DataError);
  }
}

TEST_CASE("gradient check at lambda 4 on a 3-leaf tree") {
  const SyntaxTree t = parse_tree("(X (NN a) (Y (VB b) (NN c)))");
  for (bool tags : {false, true}) {
    for (const char* labels : {"S I", "I S"}) {
      ModelParams m = small_model(4, tags, 77);
      const LabeledTree ex{t, parse_labels(labels)};
      const auto r = testutil::check_gradients(m.store(), [&](Tape& tape) {
        const TreeGraph g = build_graph(tape, m, ex.tree);
        std::vector<Var> terms;
        for (std::size_t k = 0; k < g.scores.size(); ++k)
          terms.push_back(tape.softmax_xent(g.scores[k], static_cast<std::size_t>(ex.labels.labels[k])));
        return tape.sum(terms);
      });
      CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst, " tags=", tags);
    }
  }
}

TEST_CASE("tape gradients match recursive chain rule") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const bool tags = trial % 2 == 1;
    const bool leaf_tags = trial % 4 != 1;
    const ModelParams m = small_model(3, tags, 500 + trial, leaf_tags);
    // depth <= 3 means at most 8 leaves in a binary tree; keep it smaller
    const std::size_t n = testutil::uniform(rng, 1, 5);
    std::size_t next = 0;
    Constituent c = testutil::random_binary(rng, n, next);
    // reuse the model's vocabulary for some tokens
    const SyntaxTree t = SyntaxTree::from_constituent(c);
    const Alignment a = testutil::random_alignment(rng, n, n, 1.0);
    const NodeLabelSet gold = gold_labels(t, a);

    Reference ref{m, t, gold, {}, {}, {}, {}};
    const double ref_loss = ref.run();
    const LabeledTree ex{t, gold};
    const std::vector<LabeledTree> batch{ex};
    const BatchResult got = batch_loss(m, batch);
    CHECK(got.loss == doctest::Approx(ref_loss).epsilon(1e-12));
    for (ParamId id = 0; id < m.store().size(); ++id) {
      const Tensor tape_g = got.gradients.to_dense(id);
      const auto it = ref.grad.find(id);
      for (std::size_t k = 0; k < tape_g.size(); ++k) {
        const double expected = it == ref.grad.end() ? 0.0 : it->second[k];
        CHECK(tape_g[k] == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("swapping children changes predictions only at that node and its ancestors") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    const ModelParams m = small_model(5, trial % 2 == 0, 900 + trial);
    const std::size_t n = testutil::uniform(rng, 3, 10);
    const SyntaxTree t = testutil::random_tree(rng, n);
    const NodeId target = t.internal_nodes()[testutil::uniform(rng, 0, t.num_internal() - 1)];

    // build the swapped tree
    Constituent c = t.to_constituent();
    std::vector<NodeId> path;  // root .. target
    for (NodeId id = t.root(); id != target;) {
      path.push_back(id);
      const TreeNode& node = t.node(id);
      id = (t.node(node.left).span.lo <= t.node(target).span.lo && t.node(target).span.hi <= t.node(node.left).span.hi)
               ? node.left
               : node.right;
    }
    Constituent* cur = &c;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const TreeNode& node = t.node(path[k]);
      const NodeId next = k + 1 < path.size() ? path[k + 1] : target;
      cur = &cur->children[next == node.left ? 0 : 1];
    }
    std::swap(cur->children[0], cur->children[1]);
    const SyntaxTree swapped = SyntaxTree::from_constituent(c);

    const auto before = forward(m, t);
    const auto after = forward(m, swapped);
    const auto keys_before = subtree_strings(t);
    const auto keys_after = subtree_strings(swapped);
    std::map<std::string, std::array<double, 2>> after_by_key;
    for (NodeId id : swapped.internal_nodes()) after_by_key[keys_after[id]] = after.probabilities[swapped.internal_rank(id)];

    path.push_back(target);
    for (NodeId id : t.internal_nodes()) {
      const bool affected = std::find(path.begin(), path.end(), id) != path.end();
      const auto it = after_by_key.find(keys_before[id]);
      if (affected) continue;
      REQUIRE(it != after_by_key.end());
      CHECK(it->second == before.probabilities[t.internal_rank(id)]);
    }
  }
}

TEST_CASE("plain variant ignores tags") {
  const ModelParams m = small_model(4, false);
  const SyntaxTree a = parse_tree("(S (NP (DT a) (NN b)) (VP (VB c) (NN d)))");
  const SyntaxTree b = parse_tree("(PP (VP (NN a) (DT b)) (NP (X c) (Y d)))");
  CHECK(forward(m, a).probabilities == forward(m, b).probabilities);
}

TEST_CASE("duplicating every tree leaves the batch loss unchanged") {
  const ModelParams m = small_model(4, true, 12);
  std::mt19937_64 rng(12);
  std::vector<LabeledTree> batch;
  for (int i = 0; i < 5; ++i) {
    const std::size_t n = testutil::uniform(rng, 1, 8);
    SyntaxTree t = testutil::random_tree(rng, n);
    const NodeLabelSet gold = gold_labels(t, testutil::random_alignment(rng, n, n, 0.9));
    batch.push_back({std::move(t), gold});
  }
  std::vector<LabeledTree> doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());
  const BatchResult r1 = batch_loss(m, batch);
  const BatchResult r2 = batch_loss(m, doubled);
  CHECK(r2.loss == doctest::Approx(r1.loss).epsilon(1e-12));
  for (ParamId id = 0; id < m.store().size(); ++id) {
    const Tensor g1 = r1.gradients.to_dense(id), g2 = r2.gradients.to_dense(id);
    for (std::size_t k = 0; k < g1.size(); ++k) CHECK(g2[k] == doctest::Approx(g1[k]).epsilon(1e-12));
  }
}

TEST_CASE("batch_loss is identical across thread counts") {
  const ModelParams m = small_model(6, true, 5);
  std::mt19937_64 rng(6);
  std::vector<LabeledTree> batch;
  for (int i = 0; i < 37; ++i) {
    const std::size_t n = testutil::uniform(rng, 1, 12);
    SyntaxTree t = testutil::random_tree(rng, n);
    const NodeLabelSet gold = gold_labels(t, testutil::random_alignment(rng, n, n, 0.9));
    batch.push_back({std::move(t), gold});
  }
  const BatchResult one = batch_loss(m, batch, 1);
  for (std::size_t threads : {2, 3, 8}) {
    const BatchResult many = batch_loss(m, batch, threads);
    CHECK(many.loss == one.loss);
    for (ParamId id = 0; id < m.store().size(); ++id) CHECK(many.gradients.to_dense(id) == one.gradients.to_dense(id));
  }
}

TEST_CASE("model file round trip") {
  for (bool tags : {false, true}) {
    const ModelParams m = small_model(5, tags, 21);
    std::stringstream first;
    m.save(first);
    const std::string bytes = first.str();
    std::stringstream in(bytes);
    const ModelParams loaded = ModelParams::load(in);
    CHECK(loaded == m);
    std::stringstream second;
    loaded.save(second);
    CHECK(second.str() == bytes);

    SUBCASE("unknown version") {
      std::string bad = bytes;
      bad[8] = 9;
      std::stringstream s(bad);
      CHECK_THROWS_WITH_AS(ModelParams::load(s), doctest::Contains("version 9"), DataError);
    }
    SUBCASE("truncated") {
      std::stringstream s(bytes.substr(0, bytes.size() - 3));
      CHECK_THROWS_AS(ModelParams::load(s), DataError);
    }
    SUBCASE("bad magic") {
      std::stringstream s("not a model at all");
      CHECK_THROWS_AS(ModelParams::load(s), DataError);
    }
  }
}

TEST_CASE("OOV words and unseen tags map to UNK") {
  const ModelParams m = small_model(3, true);
  const SyntaxTree t = parse_tree("(QQ (NN a) (ZZZ zebra))");
  const EncodedTree e = encode(m, t);
  CHECK(e.tag[0] == Vocab::kUnkId);
  CHECK(e.word[t.leaves()[0]] == m.words().id("a"));
  CHECK(e.word[t.leaves()[1]] == Vocab::kUnkId);
  CHECK(e.tag[t.leaves()[1]] == Vocab::kUnkId);
}
