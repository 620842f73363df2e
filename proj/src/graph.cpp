#include "fgcl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <set>
#include <unordered_map>

#include "fgcl/error.hpp"

namespace fgcl {
namespace {

std::string gid(GraphId id) { return "graph " + std::to_string(id); }

}  // namespace

void GraphInstance::validate() const {
  if (num_nodes < 1) throw ArgumentError(gid(id) + ": needs at least one node");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto [u, v] = edges[k];
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
      throw ArgumentError(gid(id) + ": edge (" + std::to_string(u) + "," + std::to_string(v) +
                          ") has an endpoint outside [0, " + std::to_string(num_nodes) + ")");
    }
    if (u == v) throw ArgumentError(gid(id) + ": self-loop at node " + std::to_string(u));
    if (u > v) throw ArgumentError(gid(id) + ": edge not stored as (min, max)");
    if (k > 0 && !(edges[k - 1] < edges[k])) {
      throw ArgumentError(gid(id) + ": edges not sorted or duplicated");
    }
  }
  if (features.rows() != static_cast<std::size_t>(num_nodes)) {
    throw ArgumentError(gid(id) + ": feature matrix has " + std::to_string(features.rows()) +
                        " rows for " + std::to_string(num_nodes) + " nodes");
  }
  if (features.cols() == 0) throw ArgumentError(gid(id) + ": feature dimension is zero");
  if (!features.all_finite()) throw ArgumentError(gid(id) + ": non-finite feature");
  if (labels.size() != label_mask.size()) {
    throw ArgumentError(gid(id) + ": labels and mask lengths differ");
  }
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] > 1 || label_mask[t] > 1) throw ArgumentError(gid(id) + ": labels must be 0/1");
  }
}

GraphInstance make_graph(GraphId id, int num_nodes, std::vector<Edge> edges, Tensor features,
                         Labels labels, Labels label_mask) {
  for (auto& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ArgumentError(gid(id) + ": duplicate edge");
  }
  GraphInstance g{id, num_nodes, std::move(edges), std::move(features), std::move(labels),
                  std::move(label_mask)};
  g.validate();
  return g;
}

std::size_t Dataset::index_of(GraphId id) const {
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].id == id) return i;
  }
  throw ArgumentError("dataset: no " + gid(id));
}

void Dataset::validate() const {
  std::set<GraphId> seen;
  for (const auto& g : graphs) {
    g.validate();
    if (g.feature_dim() != feature_dim) {
      throw SchemaError(gid(g.id) + ": feature dim " + std::to_string(g.feature_dim()) +
                        " != dataset q " + std::to_string(feature_dim));
    }
    if (g.task_count() != task_count) {
      throw SchemaError(gid(g.id) + ": task count " + std::to_string(g.task_count()) +
                        " != dataset T " + std::to_string(task_count));
    }
    if (!seen.insert(g.id).second) throw SchemaError("duplicate " + gid(g.id));
  }
}

Tensor adjacency(const GraphInstance& g) {
  const auto p = static_cast<std::size_t>(g.num_nodes);
  Tensor a(p, p);
  for (const auto [u, v] : g.edges) {
    a(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) = 1.0;
    a(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) = 1.0;
  }
  return a;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n_graphs < 2) throw ArgumentError("generate_synthetic: need at least 2 graphs");
  if (spec.feature_dim < 1) throw ArgumentError("generate_synthetic: feature_dim must be >= 1");
  if (spec.p_min > spec.p_max) throw ArgumentError("generate_synthetic: empty node-count range");
  if (spec.p_min < 3) throw ArgumentError("generate_synthetic: cycles need at least 3 nodes");
  if (!(spec.noise_sd >= 0.0)) throw ArgumentError("generate_synthetic: noise_sd must be >= 0");

  Rng rng(seed);
  Dataset d;
  d.feature_dim = spec.feature_dim;
  d.task_count = 1;
  d.graphs.reserve(static_cast<std::size_t>(spec.n_graphs));
  const auto q = static_cast<std::size_t>(spec.feature_dim);
  for (int i = 0; i < spec.n_graphs; ++i) {
    const int cls = i % 2;
    const int p = spec.p_min + static_cast<int>(rng.uniform_index(
                                   static_cast<std::size_t>(spec.p_max - spec.p_min + 1)));
    std::vector<Edge> edges;
    if (cls == 0) {
      for (int u = 0; u < p; ++u) edges.emplace_back(u, (u + 1) % p);
    } else {
      for (int u = 0; u < p; ++u)
        for (int v = u + 1; v < p; ++v) edges.emplace_back(u, v);
    }
    // Class means are 1 -/+ class_shift / 2.
    const double mean = 1.0 + (cls == 0 ? -0.5 : 0.5) * spec.class_shift;
    Tensor x(static_cast<std::size_t>(p), q);
    for (double& v : x.data()) v = spec.noise_sd > 0.0 ? rng.normal(mean, spec.noise_sd) : mean;
    d.graphs.push_back(make_graph(i, p, std::move(edges), std::move(x),
                                  {static_cast<std::uint8_t>(cls)}, {1}));
  }
  return d;
}

ClientPartition partition(const Dataset& d, int m, std::uint64_t seed) {
  if (m < 1) throw ArgumentError("partition: need at least one client");
  if (d.graphs.empty()) throw ArgumentError("partition: dataset is empty");
  if (static_cast<std::size_t>(m) > d.size()) {
    throw ArgumentError("partition: " + std::to_string(m) + " clients for " +
                        std::to_string(d.size()) + " graphs");
  }
  std::vector<GraphId> ids;
  ids.reserve(d.size());
  for (const auto& g : d.graphs) ids.push_back(g.id);
  Rng rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng.engine());
  ClientPartition out;
  out.assignments.resize(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.assignments[i % static_cast<std::size_t>(m)].push_back(ids[i]);
  }
  return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ArgumentError("stratified_split: test fraction must be in (0, 1)");
  }
  // Stratum key: 0/1 label of task 0, or 2 when unobserved.
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& g = d.graphs[i];
    const int key = g.task_count() == 0 || g.label_mask[0] == 0 ? 2 : g.labels[0];
    strata[key].push_back(i);
  }
  Rng rng(seed);
  std::vector<bool> is_test(d.size(), false);
  for (auto& [key, members] : strata) {
    std::shuffle(members.begin(), members.end(), rng.engine());
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < n_test; ++k) is_test[members[k]] = true;
  }
  Dataset train{{}, d.feature_dim, d.task_count};
  Dataset test{{}, d.feature_dim, d.task_count};
  for (std::size_t i = 0; i < d.size(); ++i) {
    (is_test[i] ? test : train).graphs.push_back(d.graphs[i]);
  }
  return {std::move(train), std::move(test)};
}

Dataset select(const Dataset& d, const std::vector<GraphId>& ids) {
  std::unordered_map<GraphId, std::size_t> index;
  for (std::size_t i = 0; i < d.size(); ++i) index.emplace(d.graphs[i].id, i);
  Dataset out{{}, d.feature_dim, d.task_count};
  out.graphs.reserve(ids.size());
  for (GraphId id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw ArgumentError("select: no " + gid(id));
    out.graphs.push_back(d.graphs[it->second]);
  }
  return out;
}

}  // namespace fgcl
