// Command-line front end: run, sweep, verify-dp, generate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fgcl/dataset_io.hpp"
#include "fgcl/experiment.hpp"

namespace {

using fgcl::exp::ExperimentConfig;
using fgcl::exp::Json;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> gamma, tau, eps0, eps1;
  std::optional<int> k, cap_n, clients, sampled, rounds;
  std::optional<std::string> encoder, eval_mode;
};

void add_run_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--gamma", o.gamma, "weight of the contrastive term");
  app->add_option("--tau", o.tau, "InfoNCE temperature");
  app->add_option("--eps0", o.eps0, "privacy budget of view 0");
  app->add_option("--eps1", o.eps1, "privacy budget of view 1");
  app->add_option("--k", o.k, "negatives per instance");
  app->add_option("--cap-n", o.cap_n, "negative stack capacity");
  app->add_option("--clients", o.clients, "number of clients M");
  app->add_option("--sampled", o.sampled, "clients sampled per round c");
  app->add_option("--rounds", o.rounds, "communication rounds R");
  app->add_option("--encoder", o.encoder, "gcn or tag")->check(CLI::IsMember({"gcn", "tag"}));
  app->add_option("--eval-mode", o.eval_mode, "clean or perturbed")
      ->check(CLI::IsMember({"clean", "perturbed"}));
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : fgcl::exp::load_config(o.config);
  auto& t = cfg.train;
  if (o.seed) t.seed = *o.seed;
  if (o.out) cfg.out_dir = *o.out;
  if (o.gamma) t.gamma = *o.gamma;
  if (o.tau) t.tau = *o.tau;
  if (o.eps0) t.eps0 = *o.eps0;
  if (o.eps1) t.eps1 = *o.eps1;
  if (o.k) t.k = *o.k;
  if (o.cap_n) t.cap_n = *o.cap_n;
  if (o.clients) t.clients = *o.clients;
  if (o.sampled) t.sampled = *o.sampled;
  if (o.rounds) t.rounds = *o.rounds;
  if (o.encoder) t.encoder.kind = fgcl::gnn::encoder_kind_from_string(*o.encoder);
  if (o.eval_mode) t.eval_mode = fgcl::fed::eval_mode_from_string(*o.eval_mode);
  fgcl::exp::validate(cfg);
  for (const auto& w : fgcl::exp::grid_warnings(cfg)) std::cerr << "warning: " << w << '\n';
  return cfg;
}

int cmd_run(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  std::cerr << "fgcl: " << cfg.train.rounds << " rounds, M=" << cfg.train.clients
            << ", c=" << cfg.train.sampled << ", out=" << cfg.out_dir << '\n';
  const auto out = fgcl::exp::run_experiment(cfg, true);
  std::cout << out.summary["final"].dump(2) << '\n';
  return 0;
}

int cmd_sweep(const Overrides& o, const std::string& grid_path) {
  const ExperimentConfig base = resolve(o);
  std::ifstream in(grid_path);
  if (!in) throw fgcl::exp::ConfigError("grid", "cannot open " + grid_path);
  Json grid_json;
  try {
    grid_json = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw fgcl::exp::ConfigError("grid", e.what());
  }
  const auto grid = fgcl::exp::grid_from_json(grid_json);
  std::cerr << "fgcl: sweeping " << grid.settings() << " settings x " << grid.seeds
            << " seeds into " << base.out_dir << '\n';
  const auto result = fgcl::exp::sweep(base, grid, true);
  std::cout << "runs: " << result.rows.size() << ", failures: " << result.failures.size()
            << '\n';
  for (const auto& f : result.failures) {
    std::cerr << "failed: k=" << f.setting.k << " gamma=" << f.setting.gamma
              << " eps=(" << f.setting.eps0 << "," << f.setting.eps1 << ") seed#"
              << f.setting.seed_index << ": " << f.error << '\n';
  }
  return result.failures.empty() ? 0 : kExitRuntime;
}

int cmd_verify_dp(const std::vector<double>& eps, std::size_t samples, std::size_t bins,
                  std::uint64_t seed) {
  const Json report = fgcl::exp::verify_dp(eps, samples, bins, seed);
  std::cout << report.dump(2) << '\n';
  return report["all_pass"].get<bool>() ? 0 : kExitRuntime;
}

int cmd_generate(const Overrides& o, const std::string& path) {
  const ExperimentConfig cfg = resolve(o);
  if (!cfg.dataset_path.empty()) {
    throw fgcl::exp::ConfigError("dataset", "generate needs a synthetic config");
  }
  const auto d = fgcl::exp::resolve_dataset(cfg);
  fgcl::save_dataset(d, path);
  std::cerr << "wrote " << d.size() << " graphs to " << path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated graph contrastive learning simulator"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, gen_o;
  auto* run = app.add_subcommand("run", "train one configuration");
  add_run_flags(run, run_o);

  std::string grid_path;
  auto* sw = app.add_subcommand("sweep", "train every setting of a grid");
  add_run_flags(sw, sweep_o);
  sw->add_option("--grid", grid_path, "grid JSON")->required()->check(CLI::ExistingFile);

  std::vector<double> eps{0.1, 1.0, 10.0};
  std::size_t samples = 1000000;
  std::size_t bins = 40;
  std::uint64_t dp_seed = 0;
  auto* vd = app.add_subcommand("verify-dp", "Monte-Carlo check of the edge mechanism");
  vd->add_option("--eps", eps, "privacy budgets")->delimiter(',');
  vd->add_option("--samples", samples, "samples per graph");
  vd->add_option("--bins", bins, "histogram bins");
  vd->add_option("--seed", dp_seed, "seed");

  std::string dataset_out;
  auto* gen = app.add_subcommand("generate", "write the synthetic dataset as JSON lines");
  add_run_flags(gen, gen_o);
  gen->add_option("path", dataset_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_o);
    if (*sw) return cmd_sweep(sweep_o, grid_path);
    if (*vd) return cmd_verify_dp(eps, samples, bins, dp_seed);
    if (*gen) return cmd_generate(gen_o, dataset_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
