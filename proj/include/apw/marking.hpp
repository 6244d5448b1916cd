#pragma once

#include <span>

#include "apw/estimator.hpp"

namespace apw {

struct MarkResult {
  IndexSet marked;  ///< both members of every selected pair
  double achieved_fraction = 0.0;  ///< eta(marked) / eta(all)
  std::size_t pairs_considered = 0;
  std::size_t pairs_marked = 0;
};

/// Dörfler marking with minimal cardinality.
///
/// Pairs are taken in descending contribution order (ties: smaller |G|^2, then
/// lexicographic) until their sum reaches theta^2 * total_sq. Since every pair
/// is one atom, this greedy prefix is a smallest pair set that meets the bulk
/// criterion. Throws std::invalid_argument for theta outside (0, 1) and
/// std::domain_error when the candidates cannot reach the threshold.
MarkResult dorfler_mark(std::span<const PairContribution> contribs, double theta, double total_sq, int dim);

}  // namespace apw
