#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fgcl/contrastive.hpp"
#include "fgcl/gnn.hpp"
#include "fgcl/graph.hpp"
#include "fgcl/param_store.hpp"
#include "fgcl/rng.hpp"

// In-process federated simulation: clients train locally on perturbed views
// with the contrastive objective, the server aggregates with FedAvg.
namespace fgcl::fed {

enum class EvalMode { kClean, kPerturbed };

std::string to_string(EvalMode m);
EvalMode eval_mode_from_string(const std::string& s);

struct TrainConfig {
  gnn::EncoderConfig encoder;
  double lr = 0.01;
  int local_epochs = 1;
  double eps0 = 1.0;
  double eps1 = 1.0;
  double gamma = 0.1;
  double tau = 1.0;
  int k = 10;       // negatives per target
  int cap_n = 100;  // negative stack capacity
  int clients = 8;  // M
  int sampled = 4;  // c
  int rounds = 100;
  EvalMode eval_mode = EvalMode::kPerturbed;
  std::uint64_t seed = 0;

  // Throws ArgumentError naming the first out-of-range field.
  void validate() const;
};

struct GlobalModel {
  nn::ParamStore params;
  int round = 0;
};

struct ClientRuntime {
  int id = 0;
  std::vector<GraphInstance> graphs;
  contrastive::NegativeStack stack{1};
  bool stack_ready = false;
  int participations = 0;
};

struct ClientStats {
  int client_id = 0;
  double loss_c = 0.0;  // mean over steps that had negatives
  double loss_e = 0.0;  // mean over steps with an observed label
  double loss = 0.0;    // mean over steps that took a gradient step
  std::size_t steps = 0;
  std::size_t fallback_draws = 0;
  std::size_t stack_size = 0;
  double eps_cumulative = 0.0;
};

struct ClientUpdate {
  nn::ParamStore params;
  ClientStats stats;
};

// Builds one runtime per partition entry with a stack of capacity cfg.cap_n.
std::vector<ClientRuntime> make_clients(const Dataset& train, const ClientPartition& partition,
                                        const TrainConfig& cfg);

// Local training of one client starting from the global parameters. For each
// local graph: two DP views, encode, readout, negatives from the stack,
// combined loss, backward, SGD; then the second view joins the stack. The
// global parameters are not modified. Randomness comes from substreams keyed
// by (seed, round, client id).
ClientUpdate client_update(const nn::ParamStore& global, ClientRuntime& client,
                           const TrainConfig& cfg, int round);

// theta' = (c/M) * mean(updates) + ((M - c)/M) * theta, with updates summed
// in the given order.
nn::ParamStore fedavg(const nn::ParamStore& theta, std::span<const nn::ParamStore> updates, int m,
                      int c);

// c distinct ids from [0, M), ascending.
std::vector<int> sample_clients(int m, int c, Rng& rng);

struct EvalResult {
  double macro_auc = 0.0;
  std::vector<std::optional<double>> per_task;
};

// Scores each test graph from its clean adjacency or from a fresh DP view at
// `epsilon`, then macro ROC-AUC over tasks.
EvalResult evaluate(const gnn::EncoderConfig& encoder, const nn::ParamStore& params,
                    const Dataset& test, EvalMode mode, double epsilon, Rng& rng);

struct RoundReport {
  int round = 0;  // 1-based index of the completed aggregation
  std::vector<ClientStats> clients;
  double auc_clean = 0.0;
  double auc_perturbed = 0.0;
  double eps_cumulative = 0.0;  // max over all clients so far
  std::size_t fallback_draws = 0;
};

struct TrainResult {
  GlobalModel model;
  std::vector<RoundReport> reports;

  // Headline metric of the last round under the configured evaluation mode.
  std::optional<double> final_auc(EvalMode mode) const;
};

using RoundSink = std::function<void(const RoundReport&)>;

// Runs cfg.rounds rounds of sample -> parallel client_update -> fedavg ->
// evaluate. The sink sees each report as soon as its round completes.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                  const ClientPartition& partition, const RoundSink& sink = {});

}  // namespace fgcl::fed
