#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fgcl/tensor.hpp"

namespace fgcl::nn {

struct ParamShape {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  friend bool operator==(const ParamShape&, const ParamShape&) = default;
};

using Schema = std::vector<ParamShape>;

// Named tensors in insertion order. This is the unit that clients upload and
// the server averages.
class ParamStore {
 public:
  using Entry = std::pair<std::string, Tensor>;

  void add(std::string name, Tensor value);

  bool contains(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t total_size() const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  Schema schema() const;
  bool same_schema(const ParamStore& other) const;

  std::vector<double> flatten() const;
  static ParamStore unflatten(std::span<const double> flat, const Schema& schema);

  // Same schema, all zeros.
  ParamStore zeros_like() const;

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::vector<Entry> entries_;
};

// Checkpoint JSON: {"name": {"shape": [r, c], "data": [...]}, ...} in
// insertion order. Doubles are written with round-trip precision.
std::string to_checkpoint_json(const ParamStore& params);
ParamStore from_checkpoint_json(std::string_view text);
void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace fgcl::nn
