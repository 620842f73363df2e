#include "fgcl/param_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fgcl/error.hpp"

namespace fgcl::nn {

void ParamStore::add(std::string name, Tensor value) {
  if (contains(name)) throw ArgumentError("param store: duplicate name '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(value));
}

bool ParamStore::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.first == name; });
}

const Tensor& ParamStore::at(std::string_view name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw ArgumentError("param store: no parameter '" + std::string(name) + "'");
}

Tensor& ParamStore::at(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).at(name));
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

Schema ParamStore::schema() const {
  Schema s;
  s.reserve(entries_.size());
  for (const auto& [n, t] : entries_) s.push_back({n, t.rows(), t.cols()});
  return s;
}

bool ParamStore::same_schema(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first != other.entries_[i].first ||
        !entries_[i].second.same_shape(other.entries_[i].second)) {
      return false;
    }
  }
  return true;
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& e : entries_) {
    flat.insert(flat.end(), e.second.data().begin(), e.second.data().end());
  }
  return flat;
}

ParamStore ParamStore::unflatten(std::span<const double> flat, const Schema& schema) {
  std::size_t need = 0;
  for (const auto& s : schema) need += s.rows * s.cols;
  if (need != flat.size()) {
    throw ArgumentError("unflatten: schema needs " + std::to_string(need) +
                        " values, got " + std::to_string(flat.size()));
  }
  ParamStore out;
  std::size_t off = 0;
  for (const auto& s : schema) {
    const std::size_t n = s.rows * s.cols;
    out.add(s.name, Tensor(s.rows, s.cols,
                           std::vector<double>(flat.begin() + off, flat.begin() + off + n)));
    off += n;
  }
  return out;
}

ParamStore ParamStore::zeros_like() const {
  ParamStore out;
  for (const auto& [n, t] : entries_) out.add(n, Tensor(t.rows(), t.cols()));
  return out;
}

std::string to_checkpoint_json(const ParamStore& params) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, t] : params) {
    j[name] = {{"shape", {t.rows(), t.cols()}}, {"data", t.values()}};
  }
  return j.dump();
}

ParamStore from_checkpoint_json(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("checkpoint: top level must be an object");
  ParamStore out;
  for (const auto& [name, v] : j.items()) {
    try {
      const auto shape = v.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw ParseError("checkpoint: '" + name + "' shape must have 2 dims");
      out.add(name, Tensor(shape[0], shape[1], v.at("data").get<std::vector<double>>()));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("checkpoint: '" + name + "': " + e.what());
    } catch (const ShapeError& e) {
      throw ParseError("checkpoint: '" + name + "': " + e.what());
    }
  }
  return out;
}

void save_checkpoint(const ParamStore& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << to_checkpoint_json(params) << '\n';
}

ParamStore load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_checkpoint_json(ss.str());
}

}  // namespace fgcl::nn
