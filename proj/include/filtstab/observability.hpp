#pragma once

#include <vector>

#include "filtstab/model.hpp"
#include "filtstab/numlin.hpp"

namespace filtstab {

enum class ObsShortcut { none, one_to_one_h, rank_test };

std::string to_string(ObsShortcut s);

struct ObservabilityResult {
  Subspace O;              // observable space
  Subspace N;              // nonobservable space, the orthogonal complement
  int iterations_used = 0; // grow steps applied after the seed space
  bool is_observable = false;
  ObsShortcut shortcut_used = ObsShortcut::none;
};

struct ObservableSpaceOptions {
  // h injective (an exact level-set count check) proves observability
  // without iterating.
  bool use_one_to_one = true;
  // The Krylov rank test is sufficient but runs on powers of the generator,
  // which conditions poorly as d grows; off by default, kept as an option.
  bool use_rank_test = false;
  double rank_tol = kDefaultRankTol;
};

/// Smallest subspace containing span{H_b 1} and invariant under the
/// generator and every level-set projection. The fixed point is reached in
/// at most d-1 grow steps; equality of consecutive spaces is detected by
/// dimension (the iteration is monotone).
ObservabilityResult observable_space(const FiniteHmm& m,
                                     const ObservableSpaceOptions& opts = {});

/// Independent oracle: the span of all words
///   H_{n_0} e^{L d_1} H_{n_1} ... e^{L d_k} H_{n_k} 1,  k <= depth,
/// over the level-set projections and the supplied time grid. Always
/// contained in the observable space; equal for depth >= d-1 with a
/// generic grid. Throws ExplosionGuard past 10^6 words.
Subspace brute_force_observable(const FiniteHmm& m, int depth,
                                const std::vector<double>& deltas);

/// Classical rank test on [C, LC, L^2 C, ...]; sufficient, not necessary.
bool linear_rank_test(const FiniteHmm& m, double tol_rel = kDefaultRankTol);

/// True iff all d entries of h are pairwise distinct after level grouping.
bool one_to_one_shortcut(const FiniteHmm& m);

}  // namespace filtstab
