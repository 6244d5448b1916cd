#include "apw/marking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apw {

MarkResult dorfler_mark(std::span<const PairContribution> contribs, double theta, double total_sq, int dim) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("dorfler_mark: theta must lie in (0, 1)");
  MarkResult out{IndexSet(dim), 0.0, contribs.size(), 0};
  if (total_sq <= 0.0) return out;
  if (contribs.empty()) throw std::domain_error("dorfler_mark: no candidate frequencies but nonzero estimator");

  std::vector<PairContribution> order(contribs.begin(), contribs.end());
  std::sort(order.begin(), order.end(), [](const PairContribution& a, const PairContribution& b) {
    if (a.value != b.value) return a.value > b.value;
    return canonical_less(a.rep, b.rep);
  });

  const double threshold = theta * theta * total_sq;
  double acc = 0.0;
  std::vector<FreqIndex> marked;
  for (const auto& p : order) {
    if (acc >= threshold) break;
    acc += p.value;
    marked.push_back(p.rep);
    if (!(p.rep == -p.rep)) marked.push_back(-p.rep);
    ++out.pairs_marked;
  }
  if (acc < threshold) {
    throw std::domain_error("dorfler_mark: candidate contributions cannot reach the marking threshold");
  }
  out.marked = IndexSet(dim, std::move(marked));
  out.achieved_fraction = std::sqrt(acc / total_sq);
  return out;
}

}  // namespace apw
