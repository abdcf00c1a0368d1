#include "filtstab/observability.hpp"

#include <algorithm>
#include <cmath>

namespace filtstab {

std::string to_string(ObsShortcut s) {
  switch (s) {
    case ObsShortcut::one_to_one_h: return "one_to_one_h";
    case ObsShortcut::rank_test: return "rank_test";
    default: return "none";
  }
}

bool one_to_one_shortcut(const FiniteHmm& m) {
  return level_sets(m).count() == m.d;
}

bool linear_rank_test(const FiniteHmm& m, double tol_rel) {
  const LevelSetStructure ls = level_sets(m);
  const int d = m.d;
  const int r = ls.count();
  Eigen::MatrixXd C(d, r);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d);
  for (int k = 0; k < r; ++k) C.col(k) = ls.apply(k, ones);

  Eigen::MatrixXd krylov(d, static_cast<long>(r) * d);
  Eigen::MatrixXd block = C;
  for (int p = 0; p < d; ++p) {
    krylov.middleCols(static_cast<long>(p) * r, r) = block;
    block = m.generator * block;
  }
  return numerical_rank(krylov, tol_rel) == d;
}

ObservabilityResult observable_space(const FiniteHmm& m,
                                     const ObservableSpaceOptions& opts) {
  const int d = m.d;
  const LevelSetStructure ls = level_sets(m);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d);

  ObservabilityResult out{Subspace(d, opts.rank_tol), Subspace(d, opts.rank_tol),
                          0, false, ObsShortcut::none};

  if (opts.use_one_to_one && ls.count() == d) {
    out.O = Subspace::full(d, opts.rank_tol);
    out.N = Subspace(d, opts.rank_tol);
    out.is_observable = true;
    out.shortcut_used = ObsShortcut::one_to_one_h;
    return out;
  }
  if (opts.use_rank_test && linear_rank_test(m, opts.rank_tol)) {
    out.O = Subspace::full(d, opts.rank_tol);
    out.N = Subspace(d, opts.rank_tol);
    out.is_observable = true;
    out.shortcut_used = ObsShortcut::rank_test;
    return out;
  }

  // seed: span{ H_b 1 } over the level sets
  for (int k = 0; k < ls.count(); ++k) out.O.grow(ls.apply(k, ones));

  // Products with the generator can cancel to pure roundoff (e.g. L*1 for a
  // conservative row summed in a different order); below this floor they are
  // structural zeros, not new directions. Projections are exact and need no
  // floor.
  const double gen_floor =
      opts.rank_tol * std::max(1.0, m.generator.norm());

  // grow with the generator and the projections until the dimension stops
  while (out.O.dim() < d) {
    std::vector<Eigen::VectorXd> candidates;
    candidates.reserve(static_cast<size_t>(out.O.dim()) *
                       static_cast<size_t>(1 + ls.count()));
    for (int c = 0; c < out.O.dim(); ++c) {
      const Eigen::VectorXd v = out.O.basis().col(c);
      Eigen::VectorXd lv = m.generator * v;
      if (lv.norm() > gen_floor) candidates.push_back(std::move(lv));
      for (int k = 0; k < ls.count(); ++k) candidates.push_back(ls.apply(k, v));
    }
    const int added = out.O.grow(candidates);
    ++out.iterations_used;
    if (added == 0) break;
  }

  out.N = orthogonal_complement(out.O);
  out.is_observable = out.O.dim() == d;
  return out;
}

Subspace brute_force_observable(const FiniteHmm& m, int depth,
                                const std::vector<double>& deltas) {
  const int d = m.d;
  const LevelSetStructure ls = level_sets(m);
  const int r = ls.count();
  const size_t g = deltas.size();

  // word count: sum_{k<=depth} r^{k+1} g^k
  double count = 0;
  double level_count = r;
  for (int k = 0; k <= depth; ++k) {
    count += level_count;
    level_count *= static_cast<double>(r) * static_cast<double>(g);
  }
  if (count > 1e6)
    throw ExplosionGuard("brute_force_observable: > 10^6 words");

  std::vector<Eigen::MatrixXd> trans;
  trans.reserve(g);
  for (double dl : deltas) trans.push_back(expm(m.generator, dl));

  Subspace span(d, kDefaultRankTol);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d);

  // level j holds the words ending in 1 with j propagation factors
  std::vector<Eigen::VectorXd> level;
  for (int k = 0; k < r; ++k) {
    level.push_back(ls.apply(k, ones));
    span.grow(level.back());
  }
  for (int j = 1; j <= depth && span.dim() < d; ++j) {
    const bool keep = j < depth;  // the deepest level is never expanded
    std::vector<Eigen::VectorXd> next;
    if (keep) next.reserve(level.size() * g * static_cast<size_t>(r));
    for (const Eigen::VectorXd& w : level)
      for (const Eigen::MatrixXd& T : trans) {
        const Eigen::VectorXd tw = T * w;
        for (int k = 0; k < r; ++k) {
          Eigen::VectorXd word = ls.apply(k, tw);
          span.grow(word);
          if (keep) next.push_back(std::move(word));
        }
      }
    level.swap(next);
  }
  return span;
}

}  // namespace filtstab
