#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>

#include "filtstab/model.hpp"
#include "filtstab/rng.hpp"

namespace testutil {

// Seeded random valid model: sparse nonnegative off-diagonal rates in (0,2),
// observation values drawn from {0, 1, ..., n_levels-1}. Deterministic in
// (seed, d, n_levels).
inline filtstab::FiniteHmm random_model(std::uint64_t seed, int d,
                                        int n_levels) {
  filtstab::PathRng rng(seed, 0);
  filtstab::FiniteHmm m;
  m.d = d;
  m.generator = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    double row = 0.0;
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      const double gate = rng.uniform01();
      const double mag = rng.uniform01();
      const double rate = gate < 0.35 ? 0.0 : 2.0 * mag;
      m.generator(i, j) = rate;
      row += rate;
    }
    m.generator(i, i) = -row;
  }
  m.h = Eigen::VectorXd(d);
  for (int i = 0; i < d; ++i) {
    const int lev = std::min(static_cast<int>(rng.uniform01() * n_levels),
                             n_levels - 1);
    m.h[i] = static_cast<double>(lev);
  }
  m.kappa = 1.0;
  m.obs_kind = filtstab::ObsKind::white_noise;
  return m;
}

inline Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

inline Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace testutil
