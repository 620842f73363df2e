#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fgcl/error.hpp"
#include "fgcl/federated.hpp"
#include "fgcl/graph.hpp"

namespace fgcl::exp {

using Json = nlohmann::ordered_json;

// Invalid configuration value; field() names the offending key.
class ConfigError : public ArgumentError {
 public:
  ConfigError(std::string field, const std::string& message)
      : ArgumentError(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  std::string dataset_path;  // empty: generate synthetic data
  SyntheticSpec synthetic;
  double test_fraction = 0.2;
  fed::TrainConfig train;
  std::string out_dir = "fgcl_out";
};

// Flat JSON with one key per field. A summary.json written by a run is also
// accepted: its "config" member is used.
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::string& path);
Json to_json(const ExperimentConfig& cfg);

// Throws ConfigError for the first field outside its documented range.
void validate(const ExperimentConfig& cfg);

// Values outside the documented hyper-parameter grid. Allowed, but reported.
std::vector<std::string> grid_warnings(const ExperimentConfig& cfg);

inline const char* kMetricsHeader =
    "round,client_id,loss_c,loss_e,loss,auc_clean,auc_perturbed,eps_cumulative";

struct RunOutput {
  fed::TrainResult result;
  Json summary;
};

// Loads or generates data, splits 80/20 (stratified), partitions the train
// half over the clients and trains. When write_files is set, streams
// metrics.csv and writes summary.json and checkpoint.json into out_dir.
RunOutput run_experiment(const ExperimentConfig& cfg, bool write_files = true);

// Dataset the run uses: loaded from dataset_path or generated from seed.
Dataset resolve_dataset(const ExperimentConfig& cfg);

struct GridSpec {
  std::vector<int> k;
  std::vector<double> gamma;
  std::vector<std::pair<double, double>> eps_pairs;
  int seeds = 1;

  std::size_t settings() const;
};

// {"k": [...], "gamma": [...], "eps": [...] | "eps_pairs": [[e0, e1], ...], "seeds": n}.
// "eps" expands to every unordered pair (e0 <= e1). Omitted axes keep the
// base config's value.
GridSpec grid_from_json(const Json& j);

std::vector<std::pair<double, double>> unordered_budget_pairs(const std::vector<double>& values);

struct SweepRow {
  int k = 0;
  double gamma = 0.0;
  double eps0 = 0.0;
  double eps1 = 0.0;
  int seed_index = 0;
  std::uint64_t seed = 0;
  double auc = 0.0;
  double auc_clean = 0.0;
  double auc_perturbed = 0.0;
  double eps_cumulative = 0.0;
};

struct SweepFailure {
  SweepRow setting;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepFailure> failures;
};

inline const char* kSweepHeader =
    "k,gamma,eps0,eps1,seed_index,seed,auc,auc_clean,auc_perturbed,eps_cumulative";

// Cartesian product of the grid times seeds. Run i of seed s uses seed
// mix(base, s), so every setting sees the same seeds. Each run writes into
// its own subdirectory when write_files is set; sweep.csv collects one row
// per successful run. Failures are recorded and the sweep continues.
SweepResult sweep(const ExperimentConfig& base, const GridSpec& grid, bool write_files = true);

// DP ratio check on the canonical adjacent pair (a path a-b, a-c versus the
// triangle) for every epsilon.
Json verify_dp(const std::vector<double>& epsilons, std::size_t samples, std::size_t bins,
               std::uint64_t seed);

std::string format_double(double v);

}  // namespace fgcl::exp
