#include "fgcl/gnn.hpp"

#include <cmath>

#include "fgcl/error.hpp"

namespace fgcl::gnn {
namespace {

std::string layer_name(const char* prefix, int l, const char* leaf) {
  return std::string(prefix) + "." + std::to_string(l) + "." + leaf;
}

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(fan_in, fan_out);
  for (double& v : t.data()) v = -a + 2.0 * a * rng.uniform_open();
  return t;
}

}  // namespace

std::string to_string(EncoderKind k) { return k == EncoderKind::kGcn ? "gcn" : "tag"; }

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "gcn") return EncoderKind::kGcn;
  if (s == "tag") return EncoderKind::kTag;
  throw ArgumentError("unknown encoder '" + s + "' (expected gcn or tag)");
}

void EncoderConfig::validate() const {
  if (layers < 1) throw ArgumentError("encoder: layers must be >= 1");
  if (hidden < 1) throw ArgumentError("encoder: hidden must be >= 1");
  if (kind == EncoderKind::kTag && tag_hops < 1) throw ArgumentError("encoder: tag_hops must be >= 1");
}

nn::ParamStore init_params(const ModelShape& shape, Rng& rng) {
  shape.encoder.validate();
  if (shape.feature_dim < 1 || shape.task_count < 1) {
    throw ArgumentError("init_params: feature_dim and task_count must be >= 1");
  }
  const auto h = static_cast<std::size_t>(shape.encoder.hidden);
  nn::ParamStore p;
  for (int l = 0; l < shape.encoder.layers; ++l) {
    const std::size_t in = l == 0 ? static_cast<std::size_t>(shape.feature_dim) : h;
    if (shape.encoder.kind == EncoderKind::kGcn) {
      p.add(layer_name("gcn", l, "weight"), glorot(in, h, rng));
      p.add(layer_name("gcn", l, "bias"), Tensor(1, h));
    } else {
      for (int j = 0; j <= shape.encoder.tag_hops; ++j) {
        p.add("tag." + std::to_string(l) + ".theta." + std::to_string(j), glorot(in, h, rng));
      }
      p.add(layer_name("tag", l, "bias"), Tensor(1, h));
    }
  }
  const auto t = static_cast<std::size_t>(shape.task_count);
  p.add("clf.weight", glorot(h, t, rng));
  p.add("clf.bias", Tensor(1, t));
  return p;
}

Tensor normalize(const Tensor& weights) {
  if (weights.rows() != weights.cols()) {
    throw ShapeError("normalize: weights must be square, got " + weights.shape_str());
  }
  const std::size_t p = weights.rows();
  Tensor a(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      a(i, j) = i == j ? 1.0 : std::max(weights(i, j), 0.0);
  std::vector<double> inv_sqrt(p);
  for (std::size_t i = 0; i < p; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < p; ++j) d += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) a(i, j) *= inv_sqrt[i] * inv_sqrt[j];
  return a;
}

nn::Var encode(nn::Tape& tape, const EncoderConfig& cfg, const nn::BoundParams& params,
               const Tensor& w_hat, const Tensor& x) {
  if (w_hat.rows() != w_hat.cols() || w_hat.rows() != x.rows()) {
    throw ShapeError("encode: propagation matrix " + w_hat.shape_str() +
                     " does not match features " + x.shape_str());
  }
  const nn::Var prop = tape.constant(w_hat);
  nn::Var h = tape.constant(x);
  for (int l = 0; l < cfg.layers; ++l) {
    nn::Var z;
    if (cfg.kind == EncoderKind::kGcn) {
      z = nn::matmul(prop, nn::matmul(h, params.at(layer_name("gcn", l, "weight"))));
      z = nn::add_row(z, params.at(layer_name("gcn", l, "bias")));
    } else {
      nn::Var power = h;
      for (int j = 0; j <= cfg.tag_hops; ++j) {
        if (j > 0) power = nn::matmul(prop, power);
        const nn::Var term = nn::matmul(
            power, params.at("tag." + std::to_string(l) + ".theta." + std::to_string(j)));
        z = j == 0 ? term : nn::add(z, term);
      }
      z = nn::add_row(z, params.at(layer_name("tag", l, "bias")));
    }
    h = l + 1 < cfg.layers ? nn::relu(z) : z;
  }
  return h;
}

nn::Var readout(nn::Var h) { return nn::mean_rows(h); }

nn::Var predict(const nn::BoundParams& params, nn::Var h_g) {
  return nn::add_row(nn::matmul(h_g, params.at("clf.weight")), params.at("clf.bias"));
}

Tensor embed(const EncoderConfig& cfg, const nn::ParamStore& params, const Tensor& w_hat,
             const Tensor& x) {
  nn::Tape tape;
  nn::BoundParams bound;
  for (const auto& [name, t] : params) bound.add(name, tape.constant(t));
  return readout(encode(tape, cfg, bound, w_hat, x)).value();
}

Tensor logits(const EncoderConfig& cfg, const nn::ParamStore& params, const Tensor& w_hat,
              const Tensor& x) {
  nn::Tape tape;
  nn::BoundParams bound;
  for (const auto& [name, t] : params) bound.add(name, tape.constant(t));
  return predict(bound, readout(encode(tape, cfg, bound, w_hat, x))).value();
}

}  // namespace fgcl::gnn
