#pragma once

#include <optional>
#include <string>

#include "filtstab/chain.hpp"
#include "filtstab/model.hpp"
#include "filtstab/observability.hpp"
#include "filtstab/vendor_json.hpp"

namespace filtstab {

// Three-valued verdict: the stability theorems apply only to nondegenerate
// white-noise observations, so degenerate models get not_applicable.
enum class Verdict { yes, no, not_applicable };

std::string to_string(Verdict v);

struct StabilityReport {
  bool observable = false;
  bool detectable = false;
  int dim_N = 0;
  // Evidence for the detectability branch; empty when N is trivial.
  std::optional<double> max_real_part;
  std::optional<int> restriction_rank;
  Verdict stable = Verdict::no;
  std::string stable_note;
  Verdict strong_stable = Verdict::no;
  std::string strong_stable_note;
  int num_ergodic_classes = 0;
  bool has_transient = false;
  bool kappa_positive = false;
};

/// B^T L^T B for the orthonormal basis B of N. Checks that N really is
/// invariant under L^T before returning; throws InvarianceViolation
/// otherwise. Requires dim N >= 1.
Eigen::MatrixXd restrict_generator_to_N(const FiniteHmm& m, const Subspace& N);

/// Combines observability and chain structure into the filter-stability
/// verdicts. All inputs must come from the same model.
StabilityReport assess(const FiniteHmm& m, const ObservabilityResult& obs,
                       const ChainDecomposition& dec);

nlohmann::json report_to_json(const StabilityReport& r);

}  // namespace filtstab
