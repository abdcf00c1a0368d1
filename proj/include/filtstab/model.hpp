#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "vendor_json.hpp"

namespace filtstab {

enum class ObsKind { white_noise, counting };

std::string to_string(ObsKind kind);
std::optional<ObsKind> obs_kind_from_string(const std::string& s);

/// Finite-state signal-observation model: a continuous-time Markov chain on
/// states a_1..a_d with intensity matrix `generator`, observed through the
/// state function `h` either in additive white noise of level `kappa` or as
/// a counting process with intensity h(X_t).
struct FiniteHmm {
  int d = 0;
  Eigen::MatrixXd generator;  // d x d, rows sum to zero
  Eigen::VectorXd h;          // length d
  double kappa = 1.0;         // ignored for counting observations
  ObsKind obs_kind = ObsKind::white_noise;
  std::vector<std::string> labels;  // empty or length d
};

struct InitialPair {
  Eigen::VectorXd mu;
  Eigen::VectorXd nu;
};

struct ModelError {
  std::string code;    // NegativeRate, RowSumNonzero, ...
  std::string detail;  // human-readable location/value
};

inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kProbSumTol = 1e-12;

/// Empty result means the model satisfies every invariant.
std::vector<ModelError> validate_model(const FiniteHmm& m);

/// Probability-vector checks for both measures; `d` is the model dimension.
std::vector<ModelError> validate_pair(const InitialPair& p, int d);

/// mu << nu: every nu-null coordinate is mu-null.
bool absolutely_continuous(const InitialPair& p);

/// Level sets of h. `values` are the distinct observation values after
/// tolerance grouping; `masks[k]` is the diagonal of the projection onto
/// {i : h(a_i) = values[k]}.
struct LevelSetStructure {
  std::vector<double> values;
  std::vector<Eigen::VectorXd> masks;

  int count() const { return static_cast<int>(values.size()); }
  Eigen::MatrixXd projection(int k) const {
    return Eigen::MatrixXd(masks[static_cast<size_t>(k)].asDiagonal());
  }
  Eigen::VectorXd apply(int k, const Eigen::VectorXd& v) const {
    return masks[static_cast<size_t>(k)].cwiseProduct(v);
  }
};

/// Two h entries share a level set iff |h_i - h_j| <= 1e-9 * max(1, max|h|).
LevelSetStructure level_sets(const FiniteHmm& m);

struct Preset {
  std::string name;
  std::string description;
  FiniteHmm model;
  InitialPair init;
};

/// The workbench fixtures E1..E6.
const std::vector<Preset>& builtin_presets();
const Preset* find_preset(const std::string& name);

/// JSON model file schema:
/// {"d", "generator" (array of rows), "h", "kappa", "obs_kind", "labels"?}.
/// Unknown fields are rejected. On failure returns nullopt and fills `errs`.
std::optional<FiniteHmm> model_from_json(const nlohmann::json& j,
                                         std::vector<ModelError>& errs);
nlohmann::json model_to_json(const FiniteHmm& m);

}  // namespace filtstab
