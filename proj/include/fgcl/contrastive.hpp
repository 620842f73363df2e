#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "fgcl/autodiff.hpp"
#include "fgcl/dp_edge.hpp"
#include "fgcl/gnn.hpp"
#include "fgcl/graph.hpp"
#include "fgcl/rng.hpp"

namespace fgcl::contrastive {

struct StackEntry {
  dp::PerturbedView view;
  Labels labels;
  Labels mask;
  GraphId source_id = 0;
  // Node features of the source graph and the normalised view, kept so the
  // entry can be re-encoded with the current parameters when sampled.
  Tensor features;
  Tensor w_hat;
};

StackEntry make_entry(dp::PerturbedView view, const GraphInstance& source);

// Capacity-bounded FIFO of perturbed views that supplies negatives when the
// local batch size is 1. Index 0 is the oldest entry.
class NegativeStack {
 public:
  explicit NegativeStack(std::size_t capacity);

  // Appends, evicting the oldest entry first when full.
  void push(StackEntry entry);
  void clear() { entries_.clear(); }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const StackEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::deque<StackEntry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<StackEntry> entries_;
};

// Resets the stack to views (at eps1) of the last k graphs of `graphs`,
// oldest first. Throws ArgumentError if k >= capacity or k > graphs.size().
void stack_init(NegativeStack& stack, std::span<const GraphInstance> graphs, std::size_t k,
                double eps1, Rng& rng);

void stack_push(NegativeStack& stack, dp::PerturbedView view, const GraphInstance& source);

// True iff some task is observed in both and the labels disagree there.
bool labels_differ(const Labels& a, const Labels& mask_a, const Labels& b, const Labels& mask_b);

struct NegativeDraw {
  std::vector<std::size_t> indices;  // into the stack
  bool fallback = false;             // no entry had a different label
};

// k uniform draws with replacement from entries whose labels differ from the
// target's; from the whole stack when there are none. Throws StateError on
// an empty stack.
NegativeDraw sample_negatives(const NegativeStack& stack, const Labels& target_labels,
                              const Labels& target_mask, std::size_t k, Rng& rng);

// -log( e^{s(h0,h1)/tau} / (e^{s(h0,h1)/tau} + sum_t e^{s(neg_t,h1)/tau}) )
// with s the cosine similarity, via log-sum-exp.
nn::Var info_nce(nn::Var h0, nn::Var h1, std::span<const nn::Var> negatives, double tau);

// Mean of 1x1 losses.
nn::Var batch_mean(std::span<const nn::Var> losses);

// 0.5 * (BCE(logits0, y) + BCE(logits1, y)), each averaged over observed
// tasks. Empty when every task is masked; the instance then does not count.
std::optional<nn::Var> classification_loss(nn::Var logits0, nn::Var logits1,
                                           const Labels& labels, const Labels& mask);

// gamma * contrastive + classification.
nn::Var combined_loss(nn::Var contrastive, nn::Var classification, double gamma);

struct ObjectiveTerms {
  std::optional<nn::Var> contrastive;
  std::optional<nn::Var> classification;
  std::optional<nn::Var> total;
};

// Full single-instance objective for one target graph. Both views are
// encoded on the tape; negative embeddings enter as constants. The
// contrastive term is absent when there are no negatives.
ObjectiveTerms fgcl_objective(nn::Tape& tape, const gnn::EncoderConfig& cfg,
                              const nn::BoundParams& params, const Tensor& w_hat0,
                              const Tensor& w_hat1, const Tensor& features, const Labels& labels,
                              const Labels& mask, std::span<const Tensor> negative_embeddings,
                              double gamma, double tau);

Tensor labels_tensor(const Labels& v);

}  // namespace fgcl::contrastive
