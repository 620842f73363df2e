#include "fgcl/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fgcl/dataset_io.hpp"
#include "fgcl/dp_edge.hpp"
#include "fgcl/param_store.hpp"

namespace fgcl::exp {
namespace {

namespace fs = std::filesystem;

template <class T>
void read(const Json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError(key, "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError(key, "expected an integer");
    } else {
      if (!it->is_number()) throw ConfigError(key, "expected a number");
    }
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "dataset", "synthetic_graphs", "p_min",  "p_max",     "feature_dim", "noise_sd",
      "class_shift", "test_fraction", "clients", "sampled", "rounds",      "encoder",
      "layers",  "hidden",           "tag_hops", "lr",      "local_epochs", "eps0",
      "eps1",    "gamma",            "tau",      "k",       "cap_n",       "eval_mode",
      "seed",    "out"};
  return keys;
}

bool in_grid(double v, std::initializer_list<double> grid) {
  return std::any_of(grid.begin(), grid.end(), [&](double g) { return v == g; });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ExperimentConfig config_from_json(const Json& input) {
  if (!input.is_object()) throw ConfigError("config", "top level must be a JSON object");
  const Json& j = input.contains("config") && input["config"].is_object() ? input["config"] : input;
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().count(key)) throw ConfigError(key, "unknown configuration key");
  }
  ExperimentConfig c;
  read(j, "dataset", c.dataset_path);
  read(j, "synthetic_graphs", c.synthetic.n_graphs);
  read(j, "p_min", c.synthetic.p_min);
  read(j, "p_max", c.synthetic.p_max);
  read(j, "feature_dim", c.synthetic.feature_dim);
  read(j, "noise_sd", c.synthetic.noise_sd);
  read(j, "class_shift", c.synthetic.class_shift);
  read(j, "test_fraction", c.test_fraction);
  auto& t = c.train;
  read(j, "clients", t.clients);
  read(j, "sampled", t.sampled);
  read(j, "rounds", t.rounds);
  std::string enc = gnn::to_string(t.encoder.kind);
  read(j, "encoder", enc);
  try {
    t.encoder.kind = gnn::encoder_kind_from_string(enc);
  } catch (const ArgumentError& e) {
    throw ConfigError("encoder", e.what());
  }
  read(j, "layers", t.encoder.layers);
  read(j, "hidden", t.encoder.hidden);
  read(j, "tag_hops", t.encoder.tag_hops);
  read(j, "lr", t.lr);
  read(j, "local_epochs", t.local_epochs);
  read(j, "eps0", t.eps0);
  read(j, "eps1", t.eps1);
  read(j, "gamma", t.gamma);
  read(j, "tau", t.tau);
  read(j, "k", t.k);
  read(j, "cap_n", t.cap_n);
  std::string mode = fed::to_string(t.eval_mode);
  read(j, "eval_mode", mode);
  try {
    t.eval_mode = fed::eval_mode_from_string(mode);
  } catch (const ArgumentError& e) {
    throw ConfigError("eval_mode", e.what());
  }
  read(j, "seed", t.seed);
  read(j, "out", c.out_dir);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config", path + ": " + e.what());
  }
  return config_from_json(j);
}

Json to_json(const ExperimentConfig& c) {
  const auto& t = c.train;
  Json j;
  j["dataset"] = c.dataset_path;
  j["synthetic_graphs"] = c.synthetic.n_graphs;
  j["p_min"] = c.synthetic.p_min;
  j["p_max"] = c.synthetic.p_max;
  j["feature_dim"] = c.synthetic.feature_dim;
  j["noise_sd"] = c.synthetic.noise_sd;
  j["class_shift"] = c.synthetic.class_shift;
  j["test_fraction"] = c.test_fraction;
  j["clients"] = t.clients;
  j["sampled"] = t.sampled;
  j["rounds"] = t.rounds;
  j["encoder"] = gnn::to_string(t.encoder.kind);
  j["layers"] = t.encoder.layers;
  j["hidden"] = t.encoder.hidden;
  j["tag_hops"] = t.encoder.tag_hops;
  j["lr"] = t.lr;
  j["local_epochs"] = t.local_epochs;
  j["eps0"] = t.eps0;
  j["eps1"] = t.eps1;
  j["gamma"] = t.gamma;
  j["tau"] = t.tau;
  j["k"] = t.k;
  j["cap_n"] = t.cap_n;
  j["eval_mode"] = fed::to_string(t.eval_mode);
  j["seed"] = t.seed;
  j["out"] = c.out_dir;
  return j;
}

void validate(const ExperimentConfig& c) {
  const auto& t = c.train;
  auto check = [](bool ok, const char* field, const char* msg) {
    if (!ok) throw ConfigError(field, msg);
  };
  auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
  check(pos(t.eps0), "eps0", "must be > 0");
  check(pos(t.eps1), "eps1", "must be > 0");
  check(t.gamma >= 0.0 && std::isfinite(t.gamma), "gamma", "must be >= 0");
  check(pos(t.tau), "tau", "must be > 0");
  check(t.lr >= 0.0 && std::isfinite(t.lr), "lr", "must be >= 0");
  check(t.local_epochs >= 1, "local_epochs", "must be >= 1");
  check(t.clients >= 1, "clients", "must be >= 1");
  check(t.sampled >= 1 && t.sampled <= t.clients, "sampled", "must be in [1, clients]");
  check(t.rounds >= 0, "rounds", "must be >= 0");
  check(t.k >= 0, "k", "must be >= 0");
  check(t.cap_n >= 1, "cap_n", "must be >= 1");
  check(t.k < t.cap_n, "k", "must be below cap_n");
  check(t.encoder.layers >= 1, "layers", "must be >= 1");
  check(t.encoder.hidden >= 1, "hidden", "must be >= 1");
  check(t.encoder.tag_hops >= 1, "tag_hops", "must be >= 1");
  check(c.test_fraction > 0.0 && c.test_fraction < 1.0, "test_fraction", "must be in (0, 1)");
  if (c.dataset_path.empty()) {
    check(c.synthetic.n_graphs >= 2, "synthetic_graphs", "must be >= 2");
    check(c.synthetic.p_min >= 3, "p_min", "must be >= 3");
    check(c.synthetic.p_max >= c.synthetic.p_min, "p_max", "must be >= p_min");
    check(c.synthetic.feature_dim >= 1, "feature_dim", "must be >= 1");
    check(c.synthetic.noise_sd >= 0.0, "noise_sd", "must be >= 0");
  }
}

std::vector<std::string> grid_warnings(const ExperimentConfig& c) {
  std::vector<std::string> w;
  const auto& t = c.train;
  if (!in_grid(t.gamma, {0.0, 0.001, 0.01, 0.1, 1.0})) {
    w.push_back("gamma " + format_double(t.gamma) + " is outside the grid {0.001, 0.01, 0.1, 1}");
  }
  if (!in_grid(t.k, {1, 5, 10, 20, 30, 40, 50})) {
    w.push_back("k " + std::to_string(t.k) + " is outside the grid {1, 5, 10, 20, 30, 40, 50}");
  }
  for (double e : {t.eps0, t.eps1}) {
    if (!in_grid(e, {0.1, 1.0, 10.0, 100.0})) {
      w.push_back("epsilon " + format_double(e) + " is outside the grid {0.1, 1, 10, 100}");
    }
  }
  if (t.tau != 1.0) w.push_back("tau " + format_double(t.tau) + " differs from the default 1");
  if (t.cap_n != 100) w.push_back("cap_n " + std::to_string(t.cap_n) + " differs from the default 100");
  return w;
}

Dataset resolve_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset_path.empty()) return load_dataset(cfg.dataset_path);
  return generate_synthetic(cfg.synthetic, mix_seed(cfg.train.seed, "data"));
}

RunOutput run_experiment(const ExperimentConfig& cfg, bool write_files) {
  validate(cfg);
  const Dataset all = resolve_dataset(cfg);
  auto [train_set, test_set] =
      stratified_split(all, cfg.test_fraction, mix_seed(cfg.train.seed, "split"));
  const ClientPartition parts =
      partition(train_set, cfg.train.clients, mix_seed(cfg.train.seed, "partition"));

  const fs::path out_dir(cfg.out_dir);
  std::ofstream csv;
  if (write_files) {
    fs::create_directories(out_dir);
    csv.open(out_dir / "metrics.csv");
    if (!csv) throw std::runtime_error("cannot write " + (out_dir / "metrics.csv").string());
    csv << kMetricsHeader << '\n';
    csv.flush();
  }
  auto sink = [&](const fed::RoundReport& r) {
    if (!write_files) return;
    for (const auto& c : r.clients) {
      csv << r.round << ',' << c.client_id << ',' << format_double(c.loss_c) << ','
          << format_double(c.loss_e) << ',' << format_double(c.loss) << ','
          << format_double(r.auc_clean) << ',' << format_double(r.auc_perturbed) << ','
          << format_double(c.eps_cumulative) << '\n';
    }
    csv.flush();
  };

  RunOutput out;
  out.result = fed::train(cfg.train, train_set, test_set, parts, sink);

  Json summary;
  summary["config"] = to_json(cfg);
  summary["dataset"] = {{"graphs", all.size()},
                        {"train", train_set.size()},
                        {"test", test_set.size()},
                        {"feature_dim", all.feature_dim},
                        {"task_count", all.task_count}};
  Json final_metrics;
  final_metrics["rounds"] = out.result.model.round;
  if (!out.result.reports.empty()) {
    const auto& last = out.result.reports.back();
    final_metrics["eval_mode"] = fed::to_string(cfg.train.eval_mode);
    final_metrics["auc"] = *out.result.final_auc(cfg.train.eval_mode);
    final_metrics["auc_clean"] = last.auc_clean;
    final_metrics["auc_perturbed"] = last.auc_perturbed;
    final_metrics["eps_cumulative"] = last.eps_cumulative;
  }
  summary["final"] = final_metrics;
  Json rounds = Json::array();
  std::size_t fallbacks = 0;
  for (const auto& r : out.result.reports) {
    fallbacks += r.fallback_draws;
    rounds.push_back({{"round", r.round},
                      {"auc_clean", r.auc_clean},
                      {"auc_perturbed", r.auc_perturbed},
                      {"fallback_draws", r.fallback_draws},
                      {"eps_cumulative", r.eps_cumulative}});
  }
  summary["fallback_draws"] = fallbacks;
  summary["rounds"] = std::move(rounds);
  summary["warnings"] = grid_warnings(cfg);
  out.summary = summary;

  if (write_files) {
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    nn::save_checkpoint(out.result.model.params, (out_dir / "checkpoint.json").string());
  }
  return out;
}

std::size_t GridSpec::settings() const {
  return std::max<std::size_t>(k.size(), 1) * std::max<std::size_t>(gamma.size(), 1) *
         std::max<std::size_t>(eps_pairs.size(), 1);
}

std::vector<std::pair<double, double>> unordered_budget_pairs(const std::vector<double>& values) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i; j < values.size(); ++j) out.emplace_back(values[i], values[j]);
  return out;
}

GridSpec grid_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("grid", "top level must be a JSON object");
  GridSpec g;
  try {
    if (j.contains("k")) g.k = j["k"].get<std::vector<int>>();
    if (j.contains("gamma")) g.gamma = j["gamma"].get<std::vector<double>>();
    if (j.contains("eps")) g.eps_pairs = unordered_budget_pairs(j["eps"].get<std::vector<double>>());
    if (j.contains("eps_pairs")) {
      for (const auto& p : j["eps_pairs"]) {
        if (!p.is_array() || p.size() != 2) throw ConfigError("eps_pairs", "entries must be [eps0, eps1]");
        g.eps_pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
    }
    if (j.contains("seeds")) g.seeds = j["seeds"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("grid", e.what());
  }
  if (g.seeds < 1) throw ConfigError("seeds", "must be >= 1");
  if (j.contains("k") && g.k.empty()) throw ConfigError("k", "grid axis is empty");
  if (j.contains("gamma") && g.gamma.empty()) throw ConfigError("gamma", "grid axis is empty");
  if ((j.contains("eps") || j.contains("eps_pairs")) && g.eps_pairs.empty()) {
    throw ConfigError("eps", "grid axis is empty");
  }
  return g;
}

SweepResult sweep(const ExperimentConfig& base, const GridSpec& grid, bool write_files) {
  const std::vector<int> ks = grid.k.empty() ? std::vector<int>{base.train.k} : grid.k;
  const std::vector<double> gammas =
      grid.gamma.empty() ? std::vector<double>{base.train.gamma} : grid.gamma;
  const std::vector<std::pair<double, double>> eps =
      grid.eps_pairs.empty() ? std::vector<std::pair<double, double>>{{base.train.eps0, base.train.eps1}}
                             : grid.eps_pairs;

  const fs::path root(base.out_dir);
  std::ofstream csv;
  if (write_files) {
    fs::create_directories(root);
    csv.open(root / "sweep.csv");
    csv << kSweepHeader << '\n';
  }

  SweepResult result;
  std::size_t run_index = 0;
  for (int k : ks) {
    for (double gamma : gammas) {
      for (const auto& [e0, e1] : eps) {
        for (int s = 0; s < grid.seeds; ++s, ++run_index) {
          ExperimentConfig cfg = base;
          cfg.train.k = k;
          cfg.train.gamma = gamma;
          cfg.train.eps0 = e0;
          cfg.train.eps1 = e1;
          cfg.train.seed = mix_seed(base.train.seed, "sweep", static_cast<std::uint64_t>(s));
          cfg.out_dir = (root / ("run_" + std::to_string(run_index))).string();
          SweepRow row{k, gamma, e0, e1, s, cfg.train.seed};
          try {
            const RunOutput out = run_experiment(cfg, write_files);
            if (out.result.reports.empty()) throw StateError("run has zero rounds");
            const auto& last = out.result.reports.back();
            row.auc = *out.result.final_auc(cfg.train.eval_mode);
            row.auc_clean = last.auc_clean;
            row.auc_perturbed = last.auc_perturbed;
            row.eps_cumulative = last.eps_cumulative;
          } catch (const std::exception& e) {
            result.failures.push_back({row, e.what()});
            continue;
          }
          if (write_files) {
            csv << row.k << ',' << format_double(row.gamma) << ',' << format_double(row.eps0)
                << ',' << format_double(row.eps1) << ',' << row.seed_index << ',' << row.seed
                << ',' << format_double(row.auc) << ',' << format_double(row.auc_clean) << ','
                << format_double(row.auc_perturbed) << ',' << format_double(row.eps_cumulative)
                << '\n';
            csv.flush();
          }
          result.rows.push_back(row);
        }
      }
    }
  }
  if (write_files) {
    Json failures = Json::array();
    for (const auto& f : result.failures) {
      failures.push_back({{"k", f.setting.k},
                          {"gamma", f.setting.gamma},
                          {"eps0", f.setting.eps0},
                          {"eps1", f.setting.eps1},
                          {"seed_index", f.setting.seed_index},
                          {"error", f.error}});
    }
    write_text(root / "failures.json", failures.dump(2) + "\n");
  }
  return result;
}

Json verify_dp(const std::vector<double>& epsilons, std::size_t samples, std::size_t bins,
               std::uint64_t seed) {
  for (double e : epsilons) {
    if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("eps", "every epsilon must be > 0");
  }
  if (samples == 0) throw ConfigError("samples", "must be >= 1");
  if (bins == 0) throw ConfigError("bins", "must be >= 1");
  Tensor x(3, 1, 1.0);
  // a = 0 is linked to b = 1 and c = 2; the second graph adds b-c.
  const GraphInstance before = make_graph(0, 3, {{0, 1}, {0, 2}}, x, {}, {});
  const GraphInstance after = make_graph(1, 3, {{0, 1}, {0, 2}, {1, 2}}, x, {}, {});

  Json results = Json::array();
  bool all_pass = true;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    dp::DpRatioOptions opts;
    opts.n_samples = samples;
    opts.n_bins = bins;
    Rng rng = Rng::substream(seed, "verify_dp", i);
    const auto r = dp::dp_ratio_check(before, after, epsilons[i], opts, rng);
    all_pass = all_pass && r.pass;
    results.push_back({{"epsilon", r.epsilon},
                       {"pair", {r.pair_i, r.pair_j}},
                       {"samples", r.n_samples},
                       {"bins", r.n_bins},
                       {"populated_bins", r.populated_bins},
                       {"max_ratio", r.max_ratio},
                       {"bound", r.bound},
                       {"pass", r.pass}});
  }
  return Json{{"results", std::move(results)}, {"all_pass", all_pass}};
}

}  // namespace fgcl::exp
