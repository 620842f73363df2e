#include "fgcl/dataset_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "fgcl/error.hpp"

namespace fgcl {
namespace {

using nlohmann::json;

std::string where(std::size_t line) { return "line " + std::to_string(line); }

Labels read_bits(const json& j, const char* key, const std::string& ctx) {
  Labels out;
  for (const auto& v : j.at(key)) {
    const int b = v.get<int>();
    if (b != 0 && b != 1) throw ParseError(ctx + ": '" + key + "' entries must be 0 or 1");
    out.push_back(static_cast<std::uint8_t>(b));
  }
  return out;
}

GraphInstance parse_graph(const json& j, std::size_t line, int q) {
  std::string ctx = where(line);
  try {
    const GraphId id = j.at("id").get<GraphId>();
    ctx += " (graph " + std::to_string(id) + ")";
    const int p = j.at("p").get<int>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError(ctx + ": edge must be [i, j]");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    const auto& x = j.at("x");
    if (!x.is_array() || x.size() != static_cast<std::size_t>(std::max(p, 0))) {
      throw ParseError(ctx + ": 'x' must have p rows");
    }
    std::vector<double> data;
    std::size_t cols = x.empty() ? static_cast<std::size_t>(q) : x[0].size();
    for (const auto& row : x) {
      if (row.size() != cols) throw ParseError(ctx + ": ragged feature rows");
      for (const auto& v : row) data.push_back(v.get<double>());
    }
    Tensor features(static_cast<std::size_t>(std::max(p, 0)), cols, std::move(data));
    return make_graph(id, p, std::move(edges), std::move(features), read_bits(j, "y", ctx),
                      read_bits(j, "mask", ctx));
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw ParseError(ctx + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ParseError(ctx + ": " + e.what());
  }
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  std::string text;
  std::size_t line = 0;
  Dataset d;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(where(line) + ": " + e.what());
    }
    if (!have_header) {
      try {
        d.feature_dim = j.at("q").get<int>();
        d.task_count = j.at("t").get<int>();
      } catch (const json::exception& e) {
        throw ParseError(where(line) + ": bad header: " + e.what());
      }
      have_header = true;
      continue;
    }
    d.graphs.push_back(parse_graph(j, line, d.feature_dim));
  }
  if (!have_header) throw ParseError("dataset: missing header line");
  d.validate();
  return d;
}

void write_dataset(const Dataset& d, std::ostream& out) {
  out << json{{"q", d.feature_dim}, {"t", d.task_count}}.dump() << '\n';
  for (const auto& g : d.graphs) {
    nlohmann::ordered_json j;
    j["id"] = g.id;
    j["p"] = g.num_nodes;
    json edges = json::array();
    for (const auto& [u, v] : g.edges) edges.push_back({u, v});
    j["edges"] = std::move(edges);
    json x = json::array();
    for (std::size_t i = 0; i < g.features.rows(); ++i) {
      json row = json::array();
      for (std::size_t k = 0; k < g.features.cols(); ++k) row.push_back(g.features(i, k));
      x.push_back(std::move(row));
    }
    j["x"] = std::move(x);
    j["y"] = std::vector<int>(g.labels.begin(), g.labels.end());
    j["mask"] = std::vector<int>(g.label_mask.begin(), g.label_mask.end());
    out << j.dump() << '\n';
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset " + path);
  return read_dataset(in);
}

void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_dataset(d, out);
}

}  // namespace fgcl
