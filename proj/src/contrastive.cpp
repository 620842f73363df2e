#include "fgcl/contrastive.hpp"

#include <algorithm>

#include "fgcl/error.hpp"

namespace fgcl::contrastive {

NegativeStack::NegativeStack(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ArgumentError("negative stack: capacity must be >= 1");
}

void NegativeStack::push(StackEntry entry) {
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back(std::move(entry));
}

void stack_init(NegativeStack& stack, std::span<const GraphInstance> graphs, std::size_t k,
                double eps1, Rng& rng) {
  if (k >= stack.capacity()) {
    throw ArgumentError("stack_init: k = " + std::to_string(k) + " must be below capacity " +
                        std::to_string(stack.capacity()));
  }
  if (k > graphs.size()) {
    throw ArgumentError("stack_init: k = " + std::to_string(k) + " exceeds dataset size " +
                        std::to_string(graphs.size()));
  }
  stack.clear();
  const dp::PrivacyBudget budget{eps1, 1.0};
  for (std::size_t i = graphs.size() - k; i < graphs.size(); ++i) {
    const GraphInstance& g = graphs[i];
    stack.push(make_entry(dp::perturb(g, budget, rng), g));
  }
}

StackEntry make_entry(dp::PerturbedView view, const GraphInstance& source) {
  StackEntry e;
  e.w_hat = gnn::normalize(view.weights);
  e.view = std::move(view);
  e.labels = source.labels;
  e.mask = source.label_mask;
  e.source_id = source.id;
  e.features = source.features;
  return e;
}

void stack_push(NegativeStack& stack, dp::PerturbedView view, const GraphInstance& source) {
  stack.push(make_entry(std::move(view), source));
}

bool labels_differ(const Labels& a, const Labels& mask_a, const Labels& b, const Labels& mask_b) {
  const std::size_t n = std::min({a.size(), b.size(), mask_a.size(), mask_b.size()});
  for (std::size_t t = 0; t < n; ++t) {
    if (mask_a[t] && mask_b[t] && a[t] != b[t]) return true;
  }
  return false;
}

NegativeDraw sample_negatives(const NegativeStack& stack, const Labels& target_labels,
                              const Labels& target_mask, std::size_t k, Rng& rng) {
  if (stack.empty()) throw StateError("sample_negatives: negative stack is empty");
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    if (labels_differ(stack[i].labels, stack[i].mask, target_labels, target_mask)) {
      candidates.push_back(i);
    }
  }
  NegativeDraw draw;
  if (candidates.empty()) {
    draw.fallback = true;
    candidates.resize(stack.size());
    for (std::size_t i = 0; i < stack.size(); ++i) candidates[i] = i;
  }
  draw.indices.reserve(k);
  for (std::size_t t = 0; t < k; ++t) {
    draw.indices.push_back(candidates[rng.uniform_index(candidates.size())]);
  }
  return draw;
}

nn::Var info_nce(nn::Var h0, nn::Var h1, std::span<const nn::Var> negatives, double tau) {
  if (negatives.empty()) throw ArgumentError("info_nce: need at least one negative");
  if (!(tau > 0.0)) throw ArgumentError("info_nce: temperature must be > 0");
  const double inv_tau = 1.0 / tau;
  std::vector<nn::Var> scores;
  scores.reserve(negatives.size() + 1);
  const nn::Var positive = nn::scalar_scale(nn::cosine_similarity(h0, h1), inv_tau);
  scores.push_back(positive);
  for (const nn::Var& n : negatives) {
    scores.push_back(nn::scalar_scale(nn::cosine_similarity(n, h1), inv_tau));
  }
  const nn::Var row = nn::transpose(nn::concat_rows(scores));
  return nn::sub(nn::logsumexp_row(row), positive);
}

nn::Var batch_mean(std::span<const nn::Var> losses) {
  if (losses.empty()) throw ArgumentError("batch_mean: empty batch");
  nn::Var total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = nn::add(total, losses[i]);
  return nn::scalar_scale(total, 1.0 / static_cast<double>(losses.size()));
}

Tensor labels_tensor(const Labels& v) {
  Tensor t(1, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
  return t;
}

std::optional<nn::Var> classification_loss(nn::Var logits0, nn::Var logits1,
                                           const Labels& labels, const Labels& mask) {
  bool any = false;
  for (auto m : mask) any = any || m != 0;
  if (!any) return std::nullopt;
  const Tensor y = labels_tensor(labels);
  const Tensor m = labels_tensor(mask);
  return nn::scalar_scale(
      nn::add(nn::bce_with_logits(logits0, y, m), nn::bce_with_logits(logits1, y, m)), 0.5);
}

nn::Var combined_loss(nn::Var contrastive, nn::Var classification, double gamma) {
  return nn::add(nn::scalar_scale(contrastive, gamma), classification);
}

ObjectiveTerms fgcl_objective(nn::Tape& tape, const gnn::EncoderConfig& cfg,
                              const nn::BoundParams& params, const Tensor& w_hat0,
                              const Tensor& w_hat1, const Tensor& features, const Labels& labels,
                              const Labels& mask, std::span<const Tensor> negative_embeddings,
                              double gamma, double tau) {
  const nn::Var h0 = gnn::readout(gnn::encode(tape, cfg, params, w_hat0, features));
  const nn::Var h1 = gnn::readout(gnn::encode(tape, cfg, params, w_hat1, features));

  ObjectiveTerms terms;
  if (!negative_embeddings.empty()) {
    std::vector<nn::Var> negs;
    negs.reserve(negative_embeddings.size());
    for (const Tensor& e : negative_embeddings) negs.push_back(tape.constant(e));
    terms.contrastive = info_nce(h0, h1, negs, tau);
  }
  terms.classification =
      classification_loss(gnn::predict(params, h0), gnn::predict(params, h1), labels, mask);

  if (terms.contrastive && terms.classification) {
    terms.total = combined_loss(*terms.contrastive, *terms.classification, gamma);
  } else if (terms.contrastive) {
    terms.total = nn::scalar_scale(*terms.contrastive, gamma);
  } else {
    terms.total = terms.classification;
  }
  return terms;
}

}  // namespace fgcl::contrastive
