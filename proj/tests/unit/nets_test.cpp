#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "tango/autodiff/check.hpp"
#include "tango/graphs/generators.hpp"
#include "tango/nets/checkpoint.hpp"
#include "tango/nets/gnn.hpp"
#include "test_util.hpp"

using namespace tango;
using namespace tango::nets;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using graphs::Graph;

namespace {

Tensor eval_layer(const GnnLayerParams& p, const Graph& g, const Tensor& h) {
  Tape tape;
  Binder bind(tape, false);
  return gnn_layer(bind, p, g, tape.constant(h)).value();
}

Tensor eval_mlp(const MlpParams& p, const Tensor& x) {
  Tape tape;
  Binder bind(tape, false);
  return mlp_forward(bind, p, tape.constant(x)).value();
}

Linear scalar_linear(double w, double b) { return Linear{Tensor::scalar(w), Tensor::scalar(b)}; }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Eight-node cube graph: 3-regular, so GCN coefficients are exactly 1/4.
Graph cube() {
  std::vector<graphs::Edge> e;
  for (int v = 0; v < 8; ++v)
    for (int bit = 1; bit < 8; bit <<= 1)
      if ((v ^ bit) > v) e.push_back({v, v ^ bit});
  return Graph(8, e);
}

}  // namespace

TEST(Mlp, IdentityLayerKeepsInput) {
  MlpParams p;
  p.layers.push_back({Tensor::identity(3), Tensor(1, 3)});
  const Tensor x = Tensor::matrix({{1, -2, 3}, {0.5, 0, -1}});
  EXPECT_EQ(eval_mlp(p, x), x);
}

TEST(Mlp, ZeroWeightGivesBiasRows) {
  MlpParams p;
  p.layers.push_back({Tensor(2, 2), Tensor::matrix({{0.3, -0.7}})});
  const Tensor y = eval_mlp(p, Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(y(r, 0), 0.3);
    EXPECT_EQ(y(r, 1), -0.7);
  }
}

TEST(Mlp, TwoLayerReluByHand) {
  MlpParams p;
  p.activation = Activation::Relu;
  p.layers.push_back({Tensor::matrix({{1, 2}, {3, -1}}), Tensor::matrix({{0.5, -0.5}})});
  p.layers.push_back({Tensor::matrix({{2}, {1}}), Tensor::scalar(0.25)});
  // [-1,1] W1 = [2,-3]; + b1 = [2.5,-3.5]; relu = [2.5,0]; W2 + b2 = 5.25.
  EXPECT_DOUBLE_EQ(eval_mlp(p, Tensor::matrix({{-1, 1}})).item(), 5.25);
}

TEST(Mlp, WidthMismatchThrows) {
  Rng rng(0);
  const auto p = init_mlp({3, 4, 1}, Activation::Relu, rng);
  EXPECT_THROW(eval_mlp(p, Tensor(2, 2)), ad::ShapeError);
  EXPECT_EQ(p.in(), 3u);
  EXPECT_EQ(p.out(), 1u);
}

TEST(Mlp, ActivationNamesRoundTrip) {
  for (const auto a : {Activation::Relu, Activation::Elu, Activation::Gelu, Activation::Tanh}) {
    EXPECT_EQ(parse_activation(activation_name(a)), a);
  }
  EXPECT_FALSE(parse_activation("swish"));
}

TEST(Gcn, IsolatedNodeUnchanged) {
  GnnLayerParams p;
  p.self = {Tensor::identity(2), Tensor(1, 2)};
  const Tensor h = Tensor::matrix({{0.3, -1.2}});
  EXPECT_EQ(eval_layer(p, Graph(1, {}), h), h);
}

TEST(Gcn, ZeroWeightGivesZero) {
  Rng rng(1);
  GnnLayerParams p;
  p.self = {Tensor(3, 3), Tensor(1, 3)};
  std::mt19937_64 gen(1);
  const Graph g = graphs::generate_family(graphs::Family::Tree, 10, rng);
  EXPECT_EQ(eval_layer(p, g, tango::testing::random_tensor(10, 3, gen, -1, 1)), Tensor(10, 3));
}

TEST(Gcn, TwoNodePathByHand) {
  // (A + I) = [[1,1],[1,1]], degrees with self-loop 2: normalized entries 1/2.
  GnnLayerParams p;
  p.self = {Tensor::identity(1), Tensor(1, 1)};
  EXPECT_EQ(eval_layer(p, Graph(2, {{0, 1}}), Tensor::column({1, 0})), Tensor::column({0.5, 0.5}));
}

TEST(Gcn, RegularGraphPreservesConstants) {
  GnnLayerParams p;
  p.self = {Tensor::identity(2), Tensor(1, 2)};
  const Tensor h(8, 2, 0.37);
  EXPECT_EQ(eval_layer(p, cube(), h), h);
}

TEST(GatedGcn, IsolatedNodeGivesSelfTerm) {
  GnnLayerParams p;
  p.kind = LayerKind::GatedGcn;
  p.self = scalar_linear(1.5, 0.0);
  p.neighbor = scalar_linear(2.0, 0.0);
  p.gate_src = scalar_linear(1.0, 0.0);
  p.gate_dst = scalar_linear(1.0, 0.0);
  EXPECT_DOUBLE_EQ(eval_layer(p, Graph(1, {}), Tensor::scalar(2.0)).item(), 3.0);
}

TEST(GatedGcn, ClosedGatesGiveSelfTerm) {
  Rng rng(4);
  auto p = init_gnn_layer(LayerKind::GatedGcn, 3, rng);
  for (auto& b : p.gate_src.bias.values()) b = -60.0;
  for (auto& b : p.gate_dst.bias.values()) b = -60.0;
  const Graph g = graphs::generate_family(graphs::Family::Caveman, 10, rng);
  std::mt19937_64 gen(4);
  const Tensor h = tango::testing::random_tensor(10, 3, gen, -1, 1);
  Tape tape;
  Binder bind(tape, false);
  const Tensor self = linear(bind, p.self, tape.constant(h)).value();
  EXPECT_LT(ad::max_abs_diff(eval_layer(p, g, h), self), 1e-30);
}

TEST(GatedGcn, SingleEdgeByHand) {
  GnnLayerParams p;
  p.kind = LayerKind::GatedGcn;
  p.self = scalar_linear(2.0, 0.0);
  p.neighbor = scalar_linear(3.0, 0.0);
  p.gate_src = scalar_linear(1.0, 0.0);
  p.gate_dst = scalar_linear(-1.0, 0.0);
  const double h0 = 1.0, h1 = 2.0;
  const Tensor y = eval_layer(p, Graph(2, {{0, 1}}), Tensor::column({h0, h1}));
  const double eta0 = sigmoid(1.0 * h1 - 1.0 * h0);  // message 1 -> 0
  const double eta1 = sigmoid(1.0 * h0 - 1.0 * h1);  // message 0 -> 1
  EXPECT_NEAR(y[0], 2.0 * h0 + eta0 * 3.0 * h1 / (eta0 + 1e-6), 1e-14);
  EXPECT_NEAR(y[1], 2.0 * h1 + eta1 * 3.0 * h0 / (eta1 + 1e-6), 1e-14);
}

TEST(Gnn, RowMismatchThrows) {
  Rng rng(0);
  for (const auto kind : {LayerKind::Gcn, LayerKind::GatedGcn}) {
    const auto p = init_gnn_layer(kind, 2, rng);
    EXPECT_THROW(eval_layer(p, Graph(3, {{0, 1}}), Tensor(2, 2)), ad::ShapeError);
    EXPECT_THROW(eval_layer(p, Graph(2, {{0, 1}}), Tensor(2, 3)), ad::ShapeError);
  }
}

TEST(Gnn, PermutationEquivariance) {
  Rng rng(77);
  std::mt19937_64 gen(77);
  for (const auto kind : {LayerKind::Gcn, LayerKind::GatedGcn}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto n = static_cast<std::size_t>(rng.between(3, 15));
      const auto family = graphs::kAllFamilies[rng.below(graphs::kAllFamilies.size())];
      const Graph g = graphs::generate_family(family, std::max<std::size_t>(n, 3), rng);
      const auto nn = g.num_nodes();
      auto p = init_gnn_layer(kind, 4, rng);
      for (auto& b : p.self.bias.values()) b = rng.uniform(-1, 1);
      std::vector<std::int32_t> perm(nn);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(std::span<std::int32_t>(perm));

      const Tensor h = tango::testing::random_tensor(nn, 4, gen, -1, 1);
      Tensor ph(nn, 4);
      for (std::size_t v = 0; v < nn; ++v)
        for (std::size_t c = 0; c < 4; ++c) ph(static_cast<std::size_t>(perm[v]), c) = h(v, c);

      const Tensor y = eval_layer(p, g, h);
      const Tensor py = eval_layer(p, g.permuted(perm), ph);
      for (std::size_t v = 0; v < nn; ++v)
        for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(py(static_cast<std::size_t>(perm[v]), c), y(v, c), 1e-10);
    }
  }
}

TEST(Gnn, FiniteDifferenceWithRespectToInputsAndWeights) {
  Rng rng(5);
  std::mt19937_64 gen(5);
  const Graph g = graphs::generate_family(graphs::Family::BarabasiAlbert, 7, rng);
  for (const auto kind : {LayerKind::Gcn, LayerKind::GatedGcn}) {
    auto p = init_gnn_layer(kind, 3, rng);
    for (auto& b : p.self.bias.values()) b = rng.uniform(-1, 1);
    const Tensor h = tango::testing::random_tensor(7, 3, gen, -1, 1);

    const ad::ScalarFn wrt_h = [&](Tape& t, Var x) {
      Binder bind(t, false);
      return ad::sum(ad::square(ad::tanh(gnn_layer(bind, p, g, x))));
    };
    EXPECT_LE(ad::finite_diff_check(wrt_h, h, 1e-5), 1e-5);

    std::vector<const Tensor*> weights{&p.self.weight};
    if (kind == LayerKind::GatedGcn) weights = {&p.self.weight, &p.neighbor.weight, &p.gate_src.weight, &p.gate_dst.weight};
    for (const Tensor* w : weights) {
      const ad::ScalarFn wrt_w = [&](Tape& t, Var x) {
        Binder bind(t, true);
        bind.assign(*w, x);
        return ad::sum(ad::square(ad::tanh(gnn_layer(bind, p, g, t.constant(h)))));
      };
      EXPECT_LE(ad::finite_diff_check(wrt_w, *w, 1e-5), 1e-5);
    }
  }
}

TEST(Gnn, BackboneAppliesSigmaBetweenLayersOnly) {
  Rng rng(9);
  const auto p = init_backbone(LayerKind::Gcn, 1, 4, 2, Activation::Tanh, rng);
  const Graph g(3, {{0, 1}, {1, 2}});
  const Tensor x = Tensor::column({0.1, 0.5, 0.9});
  Tape tape;
  Binder bind(tape, false);
  Var h = mlp_forward(bind, p.encoder, tape.constant(x));
  h = ad::tanh(gcn_layer(bind, p.layers[0], g, h));
  h = gcn_layer(bind, p.layers[1], g, h);
  EXPECT_EQ(backbone_forward(bind, p, g, tape.constant(x)).value(), h.value());
}

TEST(SumPool, Examples) {
  Tape tape;
  EXPECT_EQ(sum_pool(tape.constant(Tensor::identity(2))).value(), Tensor::matrix({{1, 1}}));
  EXPECT_EQ(sum_pool(tape.constant(Tensor::matrix({{3, -4}}))).value(), Tensor::matrix({{3, -4}}));
  std::mt19937_64 gen(3);
  const Tensor h = tango::testing::random_tensor(3, 2, gen, -1, 1);
  const Tensor s = sum_pool(tape.constant(h)).value();
  for (std::size_t c = 0; c < 2; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < 3; ++r) acc += h(r, c);
    EXPECT_DOUBLE_EQ(s(0, c), acc);
  }
}

TEST(Init, DeterministicZeroBiasGlorotBounded) {
  Rng a(123), b(123);
  const auto pa = init_backbone(LayerKind::GatedGcn, 1, 6, 3, Activation::Relu, a);
  const auto pb = init_backbone(LayerKind::GatedGcn, 1, 6, 3, Activation::Relu, b);
  EXPECT_EQ(snapshot(pa), snapshot(pb));
  std::size_t count = 0;
  visit_params(pa, "", [&](const std::string& name, const Tensor& t) {
    ++count;
    if (name.ends_with("bias")) {
      EXPECT_EQ(t, Tensor(t.rows(), t.cols())) << name;
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      for (const double w : t.values()) EXPECT_LE(std::abs(w), limit) << name;
    }
  });
  EXPECT_EQ(count, 2u + 3u * 8u);
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(8);
  const auto p = init_backbone(LayerKind::GatedGcn, 1, 5, 2, Activation::Relu, rng);
  const auto c = snapshot(p);
  EXPECT_EQ(parse_checkpoint(dump_checkpoint(c)), c);

  auto q = init_backbone(LayerKind::GatedGcn, 1, 5, 2, Activation::Relu, rng);
  EXPECT_NE(snapshot(q), c);
  restore(q, parse_checkpoint(dump_checkpoint(c)));
  EXPECT_EQ(snapshot(q), c);
}

TEST(Checkpoint, MismatchesAreRejected) {
  Rng rng(8);
  const auto narrow = init_backbone(LayerKind::Gcn, 1, 4, 2, Activation::Relu, rng);
  auto wide = init_backbone(LayerKind::Gcn, 1, 6, 2, Activation::Relu, rng);
  EXPECT_THROW(restore(wide, snapshot(narrow)), ad::ShapeError);
  auto deeper = init_backbone(LayerKind::Gcn, 1, 4, 3, Activation::Relu, rng);
  EXPECT_THROW(restore(deeper, snapshot(narrow)), CheckpointError);
  auto shallower = init_backbone(LayerKind::Gcn, 1, 4, 1, Activation::Relu, rng);
  EXPECT_THROW(restore(shallower, snapshot(narrow)), CheckpointError);
  EXPECT_THROW(parse_checkpoint("{\"a\": [[1, 2], [3]]}"), CheckpointError);
  EXPECT_THROW(parse_checkpoint("{\"a\": "), CheckpointError);
}
