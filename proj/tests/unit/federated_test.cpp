#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include <omp.h>

#include "fgcl/autodiff.hpp"
#include "fgcl/error.hpp"
#include "fgcl/federated.hpp"
#include "fgcl/metrics.hpp"
#include "fgcl/optim.hpp"
#include "test_util.hpp"

namespace fgcl::fed {
namespace {

using testing::random_tensor;

nn::ParamStore scalar_store(double v) {
  nn::ParamStore p;
  p.add("t", Tensor{{v}});
  return p;
}

TEST(FedAvg, PlainAverageWhenAllSampled) {
  const nn::ParamStore ups[] = {scalar_store(2), scalar_store(4)};
  EXPECT_EQ(fedavg(scalar_store(0), ups, 2, 2), scalar_store(3));
}

TEST(FedAvg, HalfSampledMixesWithPrevious) {
  const nn::ParamStore ups[] = {scalar_store(2)};
  EXPECT_EQ(fedavg(scalar_store(0), ups, 2, 1), scalar_store(1));
}

TEST(FedAvg, FixedPointAndConvexCombination) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    nn::ParamStore theta;
    theta.add("a", random_tensor(2, 3, rng));
    theta.add("b", random_tensor(1, 2, rng));
    const int m = 1 + static_cast<int>(rng.uniform_index(8));
    const int c = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(m)));
    const std::vector<nn::ParamStore> same(static_cast<std::size_t>(c), theta);
    const auto fixed = fedavg(theta, same, m, c);
    const auto ft = theta.flatten();
    const auto ff = fixed.flatten();
    for (std::size_t k = 0; k < ft.size(); ++k) EXPECT_NEAR(ff[k], ft[k], 1e-12);

    std::vector<nn::ParamStore> ups;
    for (int i = 0; i < c; ++i) {
      nn::ParamStore u = theta.zeros_like();
      for (auto& [n, t] : u)
        for (auto& v : t.data()) v = rng.normal(0, 3);
      ups.push_back(u);
    }
    const auto out = fedavg(theta, ups, m, c).flatten();
    for (std::size_t k = 0; k < out.size(); ++k) {
      double lo = ft[k], hi = ft[k];
      for (const auto& u : ups) {
        lo = std::min(lo, u.flatten()[k]);
        hi = std::max(hi, u.flatten()[k]);
      }
      EXPECT_GE(out[k], lo - 1e-12);
      EXPECT_LE(out[k], hi + 1e-12);
    }
  }
}

TEST(FedAvg, RejectsBadArguments) {
  const nn::ParamStore ups[] = {scalar_store(1)};
  EXPECT_THROW(fedavg(scalar_store(0), ups, 2, 2), ArgumentError);
  EXPECT_THROW(fedavg(scalar_store(0), ups, 0, 1), ArgumentError);
  nn::ParamStore other;
  other.add("u", Tensor{{1}});
  const nn::ParamStore bad[] = {other};
  EXPECT_THROW(fedavg(scalar_store(0), bad, 1, 1), ArgumentError);
}

TEST(SampleClients, CardinalityAndDeterminism) {
  Rng a(3), b(3);
  EXPECT_EQ(sample_clients(5, 5, a), (std::vector<int>{0, 1, 2, 3, 4}));
  const auto one = sample_clients(5, 1, b);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_GE(one[0], 0);
  EXPECT_LT(one[0], 5);
  Rng c(9), d(9);
  EXPECT_EQ(sample_clients(20, 7, c), sample_clients(20, 7, d));
  Rng e(10);
  const auto s = sample_clients(20, 7, e);
  EXPECT_EQ(std::set<int>(s.begin(), s.end()).size(), 7u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
}

Dataset small_data(int n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_graphs = n;
  spec.p_min = 4;
  spec.p_max = 6;
  spec.feature_dim = 3;
  return generate_synthetic(spec, seed);
}

TrainConfig small_cfg() {
  TrainConfig cfg;
  cfg.encoder.hidden = 6;
  cfg.k = 2;
  cfg.cap_n = 5;
  cfg.clients = 2;
  cfg.sampled = 2;
  cfg.rounds = 3;
  cfg.lr = 0.05;
  cfg.seed = 21;
  return cfg;
}

TEST(ClientUpdate, ZeroLearningRateReturnsGlobal) {
  auto cfg = small_cfg();
  cfg.lr = 0.0;
  const Dataset d = small_data(10, 1);
  const auto clients_part = partition(d, 2, 0);
  auto clients = make_clients(d, clients_part, cfg);
  Rng rng(2);
  const auto global = gnn::init_params({cfg.encoder, d.feature_dim, d.task_count}, rng);
  const auto before = global;
  const auto up = client_update(global, clients[0], cfg, 0);
  EXPECT_EQ(up.params, global);
  EXPECT_EQ(global, before);
  EXPECT_EQ(up.stats.steps, clients[0].graphs.size());
  EXPECT_EQ(clients[0].participations, 1);
}

TEST(ClientUpdate, OneStepMatchesFiniteDifferenceGradient) {
  auto cfg = small_cfg();
  cfg.k = 1;
  cfg.cap_n = 2;
  cfg.lr = 0.1;
  const Dataset d = small_data(2, 4);
  ClientPartition part{{{d.graphs[0].id}}};
  auto clients = make_clients(select(d, {d.graphs[0].id}), part, cfg);
  Rng rng(5);
  const auto global = gnn::init_params({cfg.encoder, d.feature_dim, d.task_count}, rng);
  const GraphInstance& g = d.graphs[0];

  // Rebuild the randomness the client will see.
  Rng views_rng = Rng::substream(cfg.seed, "views", 0, 0);
  const auto [v0, v1] = dp::make_views(g, cfg.eps0, cfg.eps1, views_rng);
  contrastive::NegativeStack stack(2);
  Rng init_rng = Rng::substream(cfg.seed, "stack_init", 0);
  contrastive::stack_init(stack, std::span<const GraphInstance>(&g, 1), 1, cfg.eps1, init_rng);
  Rng neg_rng = Rng::substream(cfg.seed, "negatives", 0, 0);
  const auto draw = contrastive::sample_negatives(stack, g.labels, g.label_mask, 1, neg_rng);
  const auto& e = stack[draw.indices[0]];
  const std::vector<Tensor> negs{gnn::embed(cfg.encoder, global, e.w_hat, e.features)};
  const Tensor w0 = gnn::normalize(v0);
  const Tensor w1 = gnn::normalize(v1);
  const auto fd = testing::finite_difference(global, [&](const nn::ParamStore& p) {
    nn::Tape tape;
    return contrastive::fgcl_objective(tape, cfg.encoder, tape.bind(p), w0, w1, g.features,
                                       g.labels, g.label_mask, negs, cfg.gamma, cfg.tau)
        .total->item();
  });

  const auto up = client_update(global, clients[0], cfg, 0);
  for (const auto& [name, t] : up.params) {
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double delta = t[k] - global.at(name)[k];
      EXPECT_LT(testing::rel_err(delta, -cfg.lr * fd.at(name)[k]), 1e-4) << name << "[" << k << "]";
    }
  }
}

TEST(Train, ZeroRoundsReturnsInitialModel) {
  auto cfg = small_cfg();
  cfg.rounds = 0;
  const Dataset d = small_data(12, 2);
  const auto res = train(cfg, d, d, partition(d, 2, 0));
  Rng init = Rng::substream(cfg.seed, "init");
  EXPECT_EQ(res.model.params, gnn::init_params({cfg.encoder, 3, 1}, init));
  EXPECT_EQ(res.model.round, 0);
  EXPECT_TRUE(res.reports.empty());
  EXPECT_FALSE(res.final_auc(EvalMode::kPerturbed));
}

TEST(Train, SingleClientEqualsDirectStreamingLoop) {
  auto cfg = small_cfg();
  cfg.clients = 1;
  cfg.sampled = 1;
  const Dataset d = small_data(8, 3);
  const auto res = train(cfg, d, d, partition(d, 1, 0));

  Rng init = Rng::substream(cfg.seed, "init");
  nn::ParamStore theta = gnn::init_params({cfg.encoder, 3, 1}, init);
  const auto& graphs = d.graphs;
  contrastive::NegativeStack stack(static_cast<std::size_t>(cfg.cap_n));
  Rng stack_rng = Rng::substream(cfg.seed, "stack_init", 0);
  contrastive::stack_init(stack, graphs, 2, cfg.eps1, stack_rng);
  // The partition shuffles ids; replay in the client's order.
  const auto order = partition(d, 1, 0).assignments[0];
  const Dataset local = select(d, order);
  stack.clear();
  Rng stack_rng2 = Rng::substream(cfg.seed, "stack_init", 0);
  contrastive::stack_init(stack, local.graphs, 2, cfg.eps1, stack_rng2);
  for (int r = 0; r < cfg.rounds; ++r) {
    Rng vr = Rng::substream(cfg.seed, "views", static_cast<std::uint64_t>(r), 0);
    Rng nr = Rng::substream(cfg.seed, "negatives", static_cast<std::uint64_t>(r), 0);
    for (const auto& g : local.graphs) {
      auto views = dp::make_views(g, cfg.eps0, cfg.eps1, vr);
      const auto draw = contrastive::sample_negatives(stack, g.labels, g.label_mask, 2, nr);
      std::vector<Tensor> negs;
      for (auto i : draw.indices)
        negs.push_back(gnn::embed(cfg.encoder, theta, stack[i].w_hat, stack[i].features));
      nn::Tape tape;
      const auto terms = contrastive::fgcl_objective(
          tape, cfg.encoder, tape.bind(theta), gnn::normalize(views.first),
          gnn::normalize(views.second), g.features, g.labels, g.label_mask, negs, cfg.gamma,
          cfg.tau);
      theta = nn::sgd_step(theta, nn::backward(tape, *terms.total), cfg.lr);
      contrastive::stack_push(stack, std::move(views.second), g);
    }
  }
  EXPECT_EQ(res.model.params, theta);
  EXPECT_EQ(res.model.round, cfg.rounds);
}

TEST(Train, SameSeedGivesIdenticalReports) {
  const auto cfg = small_cfg();
  const Dataset d = small_data(16, 5);
  const auto [tr, te] = stratified_split(d, 0.25, 1);
  const auto part = partition(tr, 2, 1);
  const auto a = train(cfg, tr, te, part);
  const auto b = train(cfg, tr, te, part);
  EXPECT_EQ(a.model.params, b.model.params);
  ASSERT_EQ(a.reports.size(), b.reports.size());
  for (std::size_t r = 0; r < a.reports.size(); ++r) {
    EXPECT_EQ(a.reports[r].auc_clean, b.reports[r].auc_clean);
    EXPECT_EQ(a.reports[r].auc_perturbed, b.reports[r].auc_perturbed);
    ASSERT_EQ(a.reports[r].clients.size(), b.reports[r].clients.size());
    for (std::size_t c = 0; c < a.reports[r].clients.size(); ++c)
      EXPECT_EQ(a.reports[r].clients[c].loss, b.reports[r].clients[c].loss);
  }
}

TEST(Train, ThreadCountDoesNotChangeResults) {
  auto cfg = small_cfg();
  cfg.clients = 4;
  cfg.sampled = 3;
  const Dataset d = small_data(24, 11);
  const auto part = partition(d, 4, 2);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto serial = train(cfg, d, d, part);
  omp_set_num_threads(4);
  const auto parallel = train(cfg, d, d, part);
  omp_set_num_threads(saved);
  EXPECT_EQ(serial.model.params, parallel.model.params);
  ASSERT_EQ(serial.reports.size(), parallel.reports.size());
  for (std::size_t r = 0; r < serial.reports.size(); ++r)
    EXPECT_EQ(serial.reports[r].auc_perturbed, parallel.reports[r].auc_perturbed);
}

TEST(Train, SchemaStableAndBudgetReported) {
  auto cfg = small_cfg();
  cfg.clients = 3;
  cfg.sampled = 1;
  cfg.rounds = 4;
  const Dataset d = small_data(12, 6);
  const auto init_schema = [&] {
    Rng r = Rng::substream(cfg.seed, "init");
    return gnn::init_params({cfg.encoder, 3, 1}, r).schema();
  }();
  std::vector<int> seen_rounds;
  const auto res = train(cfg, d, d, partition(d, 3, 0),
                         [&](const RoundReport& r) { seen_rounds.push_back(r.round); });
  EXPECT_EQ(seen_rounds, (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(res.model.params.schema(), init_schema);
  // One local epoch at eps0 = eps1 = 1 costs 2 per participation.
  std::vector<int> participations(3, 0);
  for (const auto& r : res.reports) {
    ASSERT_EQ(r.clients.size(), 1u);
    const int id = r.clients[0].client_id;
    ++participations[static_cast<std::size_t>(id)];
    EXPECT_EQ(r.clients[0].eps_cumulative, 2.0 * participations[static_cast<std::size_t>(id)]);
    EXPECT_EQ(r.eps_cumulative, 2.0 * *std::max_element(participations.begin(), participations.end()));
  }
}

TEST(Train, PartitionSizeMustMatchConfig) {
  const auto cfg = small_cfg();
  const Dataset d = small_data(12, 7);
  EXPECT_THROW(train(cfg, d, d, partition(d, 3, 0)), ArgumentError);
}

TEST(TrainConfig, Validation) {
  auto cfg = small_cfg();
  cfg.eps0 = 0.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = small_cfg();
  cfg.k = cfg.cap_n;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = small_cfg();
  cfg.sampled = 3;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  EXPECT_THROW(eval_mode_from_string("noisy"), ArgumentError);
}

TEST(Evaluate, CleanModeMatchesBruteForceAuc) {
  auto cfg = small_cfg();
  const Dataset d = small_data(20, 8);
  Rng rng(9);
  const auto params = gnn::init_params({cfg.encoder, 3, 1}, rng);
  const auto res = evaluate(cfg.encoder, params, d, EvalMode::kClean, 1.0, rng);
  std::vector<double> pos, neg;
  for (const auto& g : d.graphs) {
    const double s =
        nn::sigmoid_scalar(gnn::logits(cfg.encoder, params, gnn::normalize(adjacency(g)), g.features)[0]);
    (g.labels[0] ? pos : neg).push_back(s);
  }
  double credit = 0;
  for (double p : pos)
    for (double n : neg) credit += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  EXPECT_EQ(res.macro_auc, credit / static_cast<double>(pos.size() * neg.size()));
}

}  // namespace
}  // namespace fgcl::fed
