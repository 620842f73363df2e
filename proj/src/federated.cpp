#include "fgcl/federated.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>

#include "fgcl/autodiff.hpp"
#include "fgcl/dp_edge.hpp"
#include "fgcl/error.hpp"
#include "fgcl/kernels.hpp"
#include "fgcl/metrics.hpp"
#include "fgcl/optim.hpp"

namespace fgcl::fed {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ArgumentError(msg);
}

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

double budget_so_far(const ClientRuntime& c, const TrainConfig& cfg) {
  if (c.participations == 0) return 0.0;
  return dp::budget_report(c.participations * cfg.local_epochs, cfg.eps0, cfg.eps1);
}

}  // namespace

std::string to_string(EvalMode m) { return m == EvalMode::kClean ? "clean" : "perturbed"; }

EvalMode eval_mode_from_string(const std::string& s) {
  if (s == "clean") return EvalMode::kClean;
  if (s == "perturbed") return EvalMode::kPerturbed;
  throw ArgumentError("unknown eval mode '" + s + "' (expected clean or perturbed)");
}

void TrainConfig::validate() const {
  encoder.validate();
  require(positive_finite(eps0), "eps0 must be finite and > 0");
  require(positive_finite(eps1), "eps1 must be finite and > 0");
  require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be finite and >= 0");
  require(positive_finite(tau), "tau must be finite and > 0");
  require(lr >= 0.0 && std::isfinite(lr), "lr must be finite and >= 0");
  require(local_epochs >= 1, "local_epochs must be >= 1");
  require(k >= 0, "k must be >= 0");
  require(cap_n >= 1, "cap_n must be >= 1");
  require(k < cap_n, "k must be below cap_n");
  require(clients >= 1, "clients must be >= 1");
  require(sampled >= 1 && sampled <= clients, "sampled must be in [1, clients]");
  require(rounds >= 0, "rounds must be >= 0");
}

std::vector<ClientRuntime> make_clients(const Dataset& train, const ClientPartition& partition,
                                        const TrainConfig& cfg) {
  std::vector<ClientRuntime> out;
  out.reserve(partition.assignments.size());
  for (std::size_t i = 0; i < partition.assignments.size(); ++i) {
    ClientRuntime c;
    c.id = static_cast<int>(i);
    c.graphs = select(train, partition.assignments[i]).graphs;
    c.stack = contrastive::NegativeStack(static_cast<std::size_t>(cfg.cap_n));
    out.push_back(std::move(c));
  }
  return out;
}

ClientUpdate client_update(const nn::ParamStore& global, ClientRuntime& client,
                           const TrainConfig& cfg, int round) {
  const auto r = static_cast<std::uint64_t>(round);
  const auto cid = static_cast<std::uint64_t>(client.id);
  Rng view_rng = Rng::substream(cfg.seed, "views", r, cid);
  Rng negative_rng = Rng::substream(cfg.seed, "negatives", r, cid);

  if (!client.stack_ready) {
    Rng init_rng = Rng::substream(cfg.seed, "stack_init", cid);
    const std::size_t k0 = std::min(static_cast<std::size_t>(cfg.k), client.graphs.size());
    contrastive::stack_init(client.stack, client.graphs, k0, cfg.eps1, init_rng);
    client.stack_ready = true;
  }

  nn::ParamStore theta = global;
  ClientStats stats;
  stats.client_id = client.id;
  std::size_t n_c = 0;
  std::size_t n_e = 0;
  const auto k = static_cast<std::size_t>(cfg.k);

  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    for (const GraphInstance& g : client.graphs) {
      try {
        auto views = dp::make_views(g, cfg.eps0, cfg.eps1, view_rng);
        const Tensor w0 = gnn::normalize(views.first);
        const Tensor w1 = gnn::normalize(views.second);

        std::vector<Tensor> negatives;
        if (k > 0 && !client.stack.empty()) {
          const auto draw =
              contrastive::sample_negatives(client.stack, g.labels, g.label_mask, k, negative_rng);
          if (draw.fallback) stats.fallback_draws += draw.indices.size();
          std::map<std::size_t, Tensor> cache;
          negatives.reserve(draw.indices.size());
          for (std::size_t idx : draw.indices) {
            auto it = cache.find(idx);
            if (it == cache.end()) {
              const auto& e = client.stack[idx];
              it = cache.emplace(idx, gnn::embed(cfg.encoder, theta, e.w_hat, e.features)).first;
            }
            negatives.push_back(it->second);
          }
        }

        nn::Tape tape;
        const nn::BoundParams bound = tape.bind(theta);
        const auto terms = contrastive::fgcl_objective(tape, cfg.encoder, bound, w0, w1,
                                                       g.features, g.labels, g.label_mask,
                                                       negatives, cfg.gamma, cfg.tau);
        if (terms.contrastive) {
          stats.loss_c += terms.contrastive->item();
          ++n_c;
        }
        if (terms.classification) {
          stats.loss_e += terms.classification->item();
          ++n_e;
        }
        if (terms.total) {
          stats.loss += terms.total->item();
          ++stats.steps;
          theta = nn::sgd_step(theta, nn::backward(tape, *terms.total), cfg.lr);
        }
        contrastive::stack_push(client.stack, std::move(views.second), g);
      } catch (const NumericError& e) {
        throw NumericError("client " + std::to_string(client.id) + ", round " +
                           std::to_string(round) + ", graph " + std::to_string(g.id) + ": " +
                           e.what());
      }
    }
  }
  if (n_c > 0) stats.loss_c /= static_cast<double>(n_c);
  if (n_e > 0) stats.loss_e /= static_cast<double>(n_e);
  if (stats.steps > 0) stats.loss /= static_cast<double>(stats.steps);
  stats.stack_size = client.stack.size();
  ++client.participations;
  stats.eps_cumulative = budget_so_far(client, cfg);
  return {std::move(theta), stats};
}

nn::ParamStore fedavg(const nn::ParamStore& theta, std::span<const nn::ParamStore> updates, int m,
                      int c) {
  require(c >= 1 && c <= m, "fedavg: need 1 <= c <= M");
  require(updates.size() == static_cast<std::size_t>(c), "fedavg: expected c updates");
  for (const auto& u : updates) {
    require(u.same_schema(theta), "fedavg: update schema differs from the global model");
  }
  std::vector<double> mean(theta.total_size(), 0.0);
  for (const auto& u : updates) kernels::axpy(1.0, u.flatten(), mean);
  const double inv_c = 1.0 / static_cast<double>(c);
  const double w_new = static_cast<double>(c) / static_cast<double>(m);
  const double w_old = static_cast<double>(m - c) / static_cast<double>(m);
  const std::vector<double> old = theta.flatten();
  std::vector<double> out(old.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = w_new * (mean[i] * inv_c) + w_old * old[i];
  }
  return nn::ParamStore::unflatten(out, theta.schema());
}

std::vector<int> sample_clients(int m, int c, Rng& rng) {
  require(m >= 1, "sample_clients: M must be >= 1");
  require(c >= 1 && c <= m, "sample_clients: need 1 <= c <= M");
  std::vector<int> ids(static_cast<std::size_t>(m));
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < static_cast<std::size_t>(c); ++i) {
    const std::size_t j = i + rng.uniform_index(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(static_cast<std::size_t>(c));
  std::sort(ids.begin(), ids.end());
  return ids;
}

EvalResult evaluate(const gnn::EncoderConfig& encoder, const nn::ParamStore& params,
                    const Dataset& test, EvalMode mode, double epsilon, Rng& rng) {
  if (test.graphs.empty()) throw EvaluationError("evaluate: empty test set");
  std::vector<std::vector<double>> scores;
  std::vector<Labels> labels;
  std::vector<Labels> masks;
  scores.reserve(test.size());
  for (const auto& g : test.graphs) {
    const Tensor w = mode == EvalMode::kClean
                         ? adjacency(g)
                         : dp::perturb(g, dp::PrivacyBudget{epsilon, 1.0}, rng).weights;
    const Tensor z = gnn::logits(encoder, params, gnn::normalize(w), g.features);
    std::vector<double> s(z.size());
    for (std::size_t t = 0; t < z.size(); ++t) s[t] = nn::sigmoid_scalar(z[t]);
    scores.push_back(std::move(s));
    labels.push_back(g.labels);
    masks.push_back(g.label_mask);
  }
  auto m = metrics::macro_auc(scores, labels, masks);
  return {m.macro, std::move(m.per_task)};
}

std::optional<double> TrainResult::final_auc(EvalMode mode) const {
  if (reports.empty()) return std::nullopt;
  return mode == EvalMode::kClean ? reports.back().auc_clean : reports.back().auc_perturbed;
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                  const ClientPartition& partition, const RoundSink& sink) {
  cfg.validate();
  require(partition.clients() == cfg.clients, "train: partition has " +
                                                  std::to_string(partition.clients()) +
                                                  " clients, config says " +
                                                  std::to_string(cfg.clients));
  std::vector<ClientRuntime> clients = make_clients(train_set, partition, cfg);

  Rng init_rng = Rng::substream(cfg.seed, "init");
  TrainResult result;
  result.model.params = gnn::init_params(
      {cfg.encoder, train_set.feature_dim, train_set.task_count}, init_rng);

  for (int r = 0; r < cfg.rounds; ++r) {
    Rng round_rng = Rng::substream(cfg.seed, "clients", static_cast<std::uint64_t>(r));
    const std::vector<int> sampled = sample_clients(cfg.clients, cfg.sampled, round_rng);

    std::vector<ClientUpdate> updates(sampled.size());
    std::vector<std::exception_ptr> errors(sampled.size());
    const nn::ParamStore& global = result.model.params;
    const long n = static_cast<long>(sampled.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) {
      const auto slot = static_cast<std::size_t>(i);
      try {
        updates[slot] = client_update(global, clients[static_cast<std::size_t>(sampled[slot])],
                                      cfg, r);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    std::vector<nn::ParamStore> params;
    params.reserve(updates.size());
    RoundReport report;
    report.round = r + 1;
    for (auto& u : updates) {
      params.push_back(std::move(u.params));
      report.fallback_draws += u.stats.fallback_draws;
      report.clients.push_back(u.stats);
    }
    result.model.params = fedavg(result.model.params, params, cfg.clients, cfg.sampled);
    result.model.round = r + 1;

    Rng eval_rng = Rng::substream(cfg.seed, "eval", static_cast<std::uint64_t>(r));
    report.auc_clean =
        evaluate(cfg.encoder, result.model.params, test_set, EvalMode::kClean, cfg.eps0, eval_rng)
            .macro_auc;
    report.auc_perturbed = evaluate(cfg.encoder, result.model.params, test_set,
                                    EvalMode::kPerturbed, cfg.eps0, eval_rng)
                               .macro_auc;
    for (const auto& c : clients) {
      report.eps_cumulative = std::max(report.eps_cumulative, budget_so_far(c, cfg));
    }
    if (sink) sink(report);
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace fgcl::fed
