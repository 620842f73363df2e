#include "fgcl/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "fgcl/error.hpp"

namespace fgcl::metrics {

std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ArgumentError("roc_auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the average rank, kept integral: a tie group at sorted positions
  // [i, j) holds ranks i+1..j.
  std::vector<std::uint64_t> rank2(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = i + 1 + j;
    i = j;
  }
  std::uint64_t n_pos = 0;
  std::uint64_t pos_rank2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i]) {
      ++n_pos;
      pos_rank2 += rank2[i];
    }
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  // 2U = 2 * sum(rank) - n_pos (n_pos + 1) = 2 * wins + ties.
  const std::uint64_t u2 = pos_rank2 - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / static_cast<double>(2 * n_pos * n_neg);
}

MacroAuc macro_auc(const std::vector<std::vector<double>>& scores,
                   const std::vector<Labels>& labels, const std::vector<Labels>& masks) {
  if (scores.size() != labels.size() || scores.size() != masks.size()) {
    throw ArgumentError("macro_auc: inconsistent graph counts");
  }
  if (scores.empty()) throw EvaluationError("macro_auc: no graphs to evaluate");
  const std::size_t tasks = labels.front().size();
  MacroAuc out;
  out.per_task.resize(tasks);
  double total = 0.0;
  std::size_t scored = 0;
  for (std::size_t t = 0; t < tasks; ++t) {
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    for (std::size_t g = 0; g < scores.size(); ++g) {
      if (!masks[g][t]) continue;
      s.push_back(scores[g][t]);
      y.push_back(labels[g][t]);
    }
    out.per_task[t] = roc_auc(s, y);
    if (out.per_task[t]) {
      total += *out.per_task[t];
      ++scored;
    }
  }
  if (scored == 0) throw EvaluationError("macro_auc: no task has both classes present");
  out.macro = total / static_cast<double>(scored);
  return out;
}

}  // namespace fgcl::metrics
