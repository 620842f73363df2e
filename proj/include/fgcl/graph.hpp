#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fgcl/rng.hpp"
#include "fgcl/tensor.hpp"

namespace fgcl {

using GraphId = std::int64_t;
using Labels = std::vector<std::uint8_t>;

// Undirected edge stored with first < second.
using Edge = std::pair<int, int>;

// One labeled, simple, undirected graph.
struct GraphInstance {
  GraphId id = 0;
  int num_nodes = 0;
  std::vector<Edge> edges;  // sorted, unique, first < second
  Tensor features;          // num_nodes x q
  Labels labels;            // length T
  Labels label_mask;        // length T, 1 = label present

  int feature_dim() const { return static_cast<int>(features.cols()); }
  int task_count() const { return static_cast<int>(labels.size()); }

  // Throws ArgumentError naming the violated invariant.
  void validate() const;

  friend bool operator==(const GraphInstance&, const GraphInstance&) = default;
};

// Builds a graph, normalising edge orientation and order. Rejects
// self-loops, duplicates and out-of-range endpoints.
GraphInstance make_graph(GraphId id, int num_nodes, std::vector<Edge> edges, Tensor features,
                         Labels labels, Labels label_mask);

struct Dataset {
  std::vector<GraphInstance> graphs;
  int feature_dim = 0;
  int task_count = 0;

  std::size_t size() const { return graphs.size(); }
  // Index of the graph with this id; throws ArgumentError if absent.
  std::size_t index_of(GraphId id) const;
  // Member invariants plus shared q and T and unique ids.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// assignments[client] lists the graph ids held by that client.
struct ClientPartition {
  std::vector<std::vector<GraphId>> assignments;

  int clients() const { return static_cast<int>(assignments.size()); }
};

// Symmetric 0/1 matrix with zero diagonal.
Tensor adjacency(const GraphInstance& g);

struct SyntheticSpec {
  int n_graphs = 200;
  int p_min = 6;
  int p_max = 12;
  int feature_dim = 8;
  double noise_sd = 0.5;
  // Gap between the two class feature means, per coordinate.
  double class_shift = 0.2;
};

// Cycles (class 0) versus complete graphs (class 1), T = 1, alternating
// labels so classes balance within one. Node features are a class-dependent
// constant vector plus N(0, noise_sd^2) noise.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Shuffled round-robin split of the dataset's ids over m clients.
ClientPartition partition(const Dataset& d, int m, std::uint64_t seed);

// Stratified split on the first task's label (masked graphs form their own
// stratum). Returns (train, test); order inside each half follows the input.
std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed);

// Subset of d in the given id order.
Dataset select(const Dataset& d, const std::vector<GraphId>& ids);

}  // namespace fgcl
