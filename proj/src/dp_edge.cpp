#include "fgcl/dp_edge.hpp"

#include <algorithm>
#include <iterator>

namespace fgcl::dp {

void PrivacyBudget::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ArgumentError("privacy budget: epsilon must be finite and > 0");
  }
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    throw ArgumentError("privacy budget: sensitivity must be finite and > 0");
  }
}

EdgeTable graph_to_table(const GraphInstance& g) {
  EdgeTable t;
  const int p = g.num_nodes;
  t.rows.reserve(static_cast<std::size_t>(p) * static_cast<std::size_t>(p - 1) / 2);
  auto e = g.edges.begin();
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const bool present = e != g.edges.end() && e->first == i && e->second == j;
      if (present) ++e;
      t.rows.push_back({i, j, static_cast<std::uint8_t>(present ? 1 : 0)});
    }
  }
  return t;
}

std::pair<PerturbedView, PerturbedView> make_views(const GraphInstance& g, double eps0,
                                                   double eps1, Rng& rng) {
  Rng s0 = rng.fork();
  Rng s1 = rng.fork();
  return make_views(g, eps0, eps1, s0, s1);
}

bool adjacent(const GraphInstance& g1, const GraphInstance& g2) {
  if (g1.num_nodes != g2.num_nodes) return false;
  std::vector<Edge> diff;
  std::set_symmetric_difference(g1.edges.begin(), g1.edges.end(), g2.edges.begin(),
                                g2.edges.end(), std::back_inserter(diff));
  return diff.size() == 1;
}

DpRatioReport dp_ratio_check(const GraphInstance& g1, const GraphInstance& g2, double epsilon,
                             const DpRatioOptions& opts, Rng& rng) {
  if (!adjacent(g1, g2)) throw ArgumentError("dp_ratio_check: graphs are not adjacent");
  PrivacyBudget{epsilon, 1.0}.validate();
  if (opts.n_bins == 0 || !(opts.hi > opts.lo)) {
    throw ArgumentError("dp_ratio_check: need n_bins > 0 and hi > lo");
  }
  std::vector<Edge> diff;
  std::set_symmetric_difference(g1.edges.begin(), g1.edges.end(), g2.edges.begin(),
                                g2.edges.end(), std::back_inserter(diff));
  const auto [pi, pj] = diff.front();

  const double width = (opts.hi - opts.lo) / static_cast<double>(opts.n_bins);
  auto histogram = [&](const GraphInstance& g, Rng& stream) {
    std::vector<std::size_t> counts(opts.n_bins, 0);
    const PrivacyBudget budget{epsilon, 1.0};
    for (std::size_t s = 0; s < opts.n_samples; ++s) {
      const PerturbedView v = perturb(g, budget, stream);
      const double x = v.weights(static_cast<std::size_t>(pi), static_cast<std::size_t>(pj));
      if (x < opts.lo || x >= opts.hi) continue;
      const auto bin = std::min(opts.n_bins - 1, static_cast<std::size_t>((x - opts.lo) / width));
      ++counts[bin];
    }
    return counts;
  };
  Rng s1 = rng.fork();
  Rng s2 = rng.fork();
  const auto h1 = histogram(g1, s1);
  const auto h2 = histogram(g2, s2);

  DpRatioReport r;
  r.epsilon = epsilon;
  r.pair_i = pi;
  r.pair_j = pj;
  r.n_samples = opts.n_samples;
  r.n_bins = opts.n_bins;
  r.bound = std::exp(epsilon) * opts.slack;
  for (std::size_t b = 0; b < opts.n_bins; ++b) {
    if (h1[b] < opts.min_count || h2[b] < opts.min_count) continue;
    ++r.populated_bins;
    const double a = static_cast<double>(h1[b]);
    const double c = static_cast<double>(h2[b]);
    r.max_ratio = std::max({r.max_ratio, a / c, c / a});
  }
  r.pass = r.populated_bins > 0 && r.max_ratio <= r.bound;
  return r;
}

double budget_report(int epochs, double eps0, double eps1) {
  if (epochs < 1) throw ArgumentError("budget_report: epochs must be >= 1");
  return static_cast<double>(epochs) * (eps0 + eps1);
}

}  // namespace fgcl::dp
