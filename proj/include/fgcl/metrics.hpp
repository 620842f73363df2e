#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fgcl/graph.hpp"

namespace fgcl::metrics {

// Area under the ROC curve via the rank-sum statistic, tied scores sharing
// their average rank. Empty when only one class is present.
std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const std::uint8_t> labels);

struct MacroAuc {
  double macro = 0.0;
  std::vector<std::optional<double>> per_task;  // empty where unscoreable
};

// scores[g][t] for graph g and task t; only observed labels are scored.
// Throws EvaluationError when no task has both classes.
MacroAuc macro_auc(const std::vector<std::vector<double>>& scores,
                   const std::vector<Labels>& labels, const std::vector<Labels>& masks);

}  // namespace fgcl::metrics
