#pragma once

#include <vector>

#include "filtstab/model.hpp"
#include "filtstab/observability.hpp"

namespace filtstab {

// Entries of the generator at or below this threshold are structural zeros
// for the purpose of the communication graph.
inline constexpr double kEdgeThreshold = 1e-12;

struct ChainDecomposition {
  std::vector<std::vector<int>> ergodic_classes;  // disjoint, sorted indices
  std::vector<int> transient;                     // sorted indices
  // stationary[i] is a full-length probability vector supported on class i.
  std::vector<Eigen::VectorXd> stationary;
};

/// Strongly-connected components of the rate graph; a component is an
/// ergodic class iff it is closed, otherwise its states are transient.
ChainDecomposition decompose(const FiniteHmm& m);

/// Kolmogorov forward flow p_t = e^{L^T t} p0.
Eigen::VectorXd forward_flow(const FiniteHmm& m, const Eigen::VectorXd& p0,
                             double t);

/// For each ergodic class, whether its indicator lies in the observable
/// space (projection residual < 1e-8).
std::vector<bool> indicator_in_O_check(const FiniteHmm& m,
                                       const ChainDecomposition& dec,
                                       const ObservabilityResult& obs);

}  // namespace filtstab
