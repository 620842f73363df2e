#pragma once

#include <string>

#include "fgcl/autodiff.hpp"
#include "fgcl/dp_edge.hpp"
#include "fgcl/param_store.hpp"
#include "fgcl/rng.hpp"
#include "fgcl/tensor.hpp"

// Weighted-adjacency graph encoders, mean readout and a linear classifier.
//
// Parameter names:
//   gcn.<l>.weight, gcn.<l>.bias           GCN layer l
//   tag.<l>.theta.<j>, tag.<l>.bias        TAG layer l, hop j = 0..K
//   clf.weight (h x T), clf.bias (1 x T)   classifier
namespace fgcl::gnn {

enum class EncoderKind { kGcn, kTag };

std::string to_string(EncoderKind k);
EncoderKind encoder_kind_from_string(const std::string& s);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::kGcn;
  int layers = 2;
  int hidden = 64;
  int tag_hops = 2;

  void validate() const;
};

struct ModelShape {
  EncoderConfig encoder;
  int feature_dim = 0;  // q
  int task_count = 0;   // T
};

// Glorot-uniform weights, zero biases.
nn::ParamStore init_params(const ModelShape& shape, Rng& rng);

// D^{-1/2} (max(W, 0) + I) D^{-1/2}, D the row sums of max(W, 0) + I.
// Negative released weights are clamped here, after the DP release.
Tensor normalize(const Tensor& weights);
inline Tensor normalize(const dp::PerturbedView& view) { return normalize(view.weights); }

// Node embeddings, p x h.
//   gcn: H <- W_hat H W_l + b_l, relu between layers, none after the last.
//   tag: H <- sum_{j=0..K} W_hat^j H Theta_{l,j} + b_l, relu between layers.
nn::Var encode(nn::Tape& tape, const EncoderConfig& cfg, const nn::BoundParams& params,
               const Tensor& w_hat, const Tensor& x);

// Column mean of node embeddings, 1 x h.
nn::Var readout(nn::Var h);

// Logits h_g * clf.weight + clf.bias, 1 x T.
nn::Var predict(const nn::BoundParams& params, nn::Var h_g);

// Graph embedding with no gradient tracking.
Tensor embed(const EncoderConfig& cfg, const nn::ParamStore& params, const Tensor& w_hat,
             const Tensor& x);

// Logits with no gradient tracking.
Tensor logits(const EncoderConfig& cfg, const nn::ParamStore& params, const Tensor& w_hat,
              const Tensor& x);

}  // namespace fgcl::gnn
