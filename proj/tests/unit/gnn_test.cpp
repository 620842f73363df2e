#include <gtest/gtest.h>

#include <numeric>

#include "fgcl/autodiff.hpp"
#include "fgcl/error.hpp"
#include "fgcl/gnn.hpp"
#include "fgcl/kernels.hpp"
#include "test_util.hpp"

namespace fgcl::gnn {
namespace {

using testing::random_tensor;

TEST(Normalize, TwoNodesOneEdge) {
  const Tensor w = normalize(Tensor{{0, 1}, {1, 0}});
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(w[k], 0.5);
}

TEST(Normalize, IsolatedNodeKeepsUnitSelfLoop) {
  const Tensor w = normalize(Tensor{{0, -0.7, 2}, {-0.7, 0, -1}, {2, -1, 0}});
  EXPECT_DOUBLE_EQ(w(1, 1), 1.0);
  EXPECT_EQ(w(0, 1), 0.0);
  EXPECT_EQ(w(1, 2), 0.0);
}

TEST(Normalize, NonNegativeSymmetricBoundedRows) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 1 + rng.uniform_index(10);
    Tensor raw = random_tensor(p, p, rng, 2.0);
    for (std::size_t i = 0; i < p; ++i) {
      raw(i, i) = 0;
      for (std::size_t j = 0; j < i; ++j) raw(i, j) = raw(j, i);
    }
    const Tensor w = normalize(raw);
    for (std::size_t i = 0; i < p; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        EXPECT_GE(w(i, j), 0.0);
        EXPECT_NEAR(w(i, j), w(j, i), 1e-15);
        row += w(i, j);
      }
      EXPECT_LE(row, std::sqrt(static_cast<double>(p)) + 1e-12);
    }
  }
}

nn::ParamStore one_layer_identity(std::size_t n) {
  nn::ParamStore p;
  p.add("gcn.0.weight", Tensor::identity(n));
  p.add("gcn.0.bias", Tensor(1, n));
  return p;
}

TEST(Encode, IdentityComposition) {
  EncoderConfig cfg;
  cfg.layers = 1;
  cfg.hidden = 3;
  nn::Tape tape;
  const Tensor h = encode(tape, cfg, tape.bind(one_layer_identity(3)), Tensor::identity(3),
                          Tensor::identity(3)).value();
  EXPECT_EQ(h, Tensor::identity(3));
}

TEST(Encode, NoReluAfterLastLayer) {
  EncoderConfig cfg;
  cfg.layers = 1;
  cfg.hidden = 2;
  nn::Tape tape;
  const Tensor x{{-1, 2}, {3, -4}};
  const Tensor h =
      encode(tape, cfg, tape.bind(one_layer_identity(2)), Tensor::identity(2), x).value();
  EXPECT_EQ(h, x);
}

TEST(Encode, ZeroParametersGiveZeroEmbedding) {
  Rng rng(5);
  for (auto kind : {EncoderKind::kGcn, EncoderKind::kTag}) {
    EncoderConfig cfg;
    cfg.kind = kind;
    cfg.hidden = 6;
    auto p = init_params({cfg, 4, 2}, rng).zeros_like();
    const Tensor w = normalize(Tensor{{0, 1, 1}, {1, 0, 0}, {1, 0, 0}});
    nn::Tape tape;
    EXPECT_EQ(encode(tape, cfg, tape.bind(p), w, random_tensor(3, 4, rng)).value(), Tensor(3, 6));
  }
}

TEST(Encode, FeatureWidthMismatchThrows) {
  Rng rng(6);
  EncoderConfig cfg;
  auto p = init_params({cfg, 4, 1}, rng);
  nn::Tape t1;
  EXPECT_THROW(encode(t1, cfg, t1.bind(p), Tensor::identity(3), Tensor(3, 5)), ShapeError);
  nn::Tape t2;
  EXPECT_THROW(encode(t2, cfg, t2.bind(p), Tensor::identity(2), Tensor(3, 4)), ShapeError);
}

TEST(Encode, TagOneHopMatchesHandComputation) {
  EncoderConfig cfg;
  cfg.kind = EncoderKind::kTag;
  cfg.layers = 1;
  cfg.hidden = 1;
  cfg.tag_hops = 1;
  nn::ParamStore p;
  p.add("tag.0.theta.0", Tensor{{2.0}});
  p.add("tag.0.theta.1", Tensor{{3.0}});
  p.add("tag.0.bias", Tensor{{0.5}});
  const Tensor w = normalize(Tensor{{0, 1}, {1, 0}});
  const Tensor x{{1.0}, {3.0}};
  nn::Tape tape;
  const Tensor h = encode(tape, cfg, tape.bind(p), w, x).value();
  // W_hat x = [2, 2]; 2x + 3 W_hat x + 0.5.
  EXPECT_DOUBLE_EQ(h(0, 0), 2.0 + 6.0 + 0.5);
  EXPECT_DOUBLE_EQ(h(1, 0), 6.0 + 6.0 + 0.5);
}

TEST(Readout, MeanOfRows) {
  nn::Tape tape;
  EXPECT_EQ(readout(tape.constant(Tensor{{1, 3}, {3, 5}})).value(), (Tensor{{2, 4}}));
  EXPECT_EQ(readout(tape.constant(Tensor{{7, -1}})).value(), (Tensor{{7, -1}}));
}

TEST(Predict, AffineClassifier) {
  nn::ParamStore p;
  p.add("clf.weight", Tensor{{2}, {5}});
  p.add("clf.bias", Tensor{{1}});
  nn::Tape tape;
  EXPECT_EQ(predict(tape.bind(p), tape.constant(Tensor{{1, 0}})).value(), (Tensor{{3}}));

  nn::ParamStore z;
  z.add("clf.weight", Tensor(2, 2));
  z.add("clf.bias", Tensor{{0.25, -4}});
  nn::Tape t2;
  EXPECT_EQ(predict(t2.bind(z), t2.constant(Tensor{{9, 9}})).value(), (Tensor{{0.25, -4}}));
}

TEST(InitParams, NamesShapesAndGlorotRange) {
  Rng rng(7);
  EncoderConfig cfg;
  cfg.hidden = 16;
  const auto p = init_params({cfg, 5, 3}, rng);
  EXPECT_EQ(p.at("gcn.0.weight").rows(), 5u);
  EXPECT_EQ(p.at("gcn.1.weight").cols(), 16u);
  EXPECT_EQ(p.at("clf.weight").cols(), 3u);
  EXPECT_EQ(p.at("clf.bias"), Tensor(1, 3));
  const double a = std::sqrt(6.0 / (5 + 16));
  for (double v : p.at("gcn.0.weight").data()) EXPECT_LE(std::abs(v), a);
}

Tensor permute_rows(const Tensor& t, const std::vector<std::size_t>& perm) {
  Tensor out(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) out(i, j) = t(perm[i], j);
  return out;
}

TEST(Encode, PermutationEquivarianceAndReadoutInvariance) {
  Rng rng(8);
  for (auto kind : {EncoderKind::kGcn, EncoderKind::kTag}) {
    EncoderConfig cfg;
    cfg.kind = kind;
    cfg.hidden = 8;
    const auto p = init_params({cfg, 3, 1}, rng);
    const std::size_t n = 6;
    Tensor w = random_tensor(n, n, rng);
    for (std::size_t i = 0; i < n; ++i) {
      w(i, i) = 0;
      for (std::size_t j = 0; j < i; ++j) w(i, j) = w(j, i);
    }
    const Tensor x = random_tensor(n, 3, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    Tensor wp(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) wp(i, j) = w(perm[i], perm[j]);

    nn::Tape tape;
    const auto bound = tape.bind(p);
    const nn::Var h = encode(tape, cfg, bound, normalize(w), x);
    const nn::Var hp = encode(tape, cfg, bound, normalize(wp), permute_rows(x, perm));
    const Tensor expected = permute_rows(h.value(), perm);
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(hp.value()[k], expected[k], 1e-9);
    const Tensor r = readout(h).value();
    const Tensor rp = readout(hp).value();
    for (std::size_t k = 0; k < r.size(); ++k) EXPECT_NEAR(r[k], rp[k], 1e-9);
  }
}

TEST(Encode, GradientsMatchFiniteDifferences) {
  Rng rng(9);
  for (auto kind : {EncoderKind::kGcn, EncoderKind::kTag}) {
    EncoderConfig cfg;
    cfg.kind = kind;
    cfg.hidden = 4;
    const auto p = init_params({cfg, 3, 2}, rng);
    const Tensor w = normalize(Tensor{{0, 1, 0.3, 0}, {1, 0, 1, -0.2}, {0.3, 1, 0, 1}, {0, -0.2, 1, 0}});
    const Tensor x = random_tensor(4, 3, rng);
    const Tensor y{{1, 0}};
    const Tensor mask{{1, 1}};
    auto loss = [&](nn::Tape& tape, const nn::ParamStore& q) {
      const auto b = tape.bind(q);
      return nn::bce_with_logits(predict(b, readout(encode(tape, cfg, b, w, x))), y, mask);
    };
    nn::Tape tape;
    const auto g = nn::backward(tape, loss(tape, p));
    const auto fd = testing::finite_difference(p, [&](const nn::ParamStore& q) {
      nn::Tape t;
      return loss(t, q).item();
    });
    for (const auto& [name, t] : g)
      for (std::size_t k = 0; k < t.size(); ++k)
        EXPECT_LT(testing::rel_err(t[k], fd.at(name)[k]), 1e-5) << to_string(kind) << " " << name;
  }
}

TEST(EncoderConfig, Validation) {
  EncoderConfig cfg;
  cfg.layers = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  EXPECT_THROW(encoder_kind_from_string("gat"), ArgumentError);
  EXPECT_EQ(encoder_kind_from_string("tag"), EncoderKind::kTag);
}

}  // namespace
}  // namespace fgcl::gnn
