#pragma once

#include <Eigen/Dense>
#include <vector>

#include "filtstab/errors.hpp"

namespace filtstab {

inline constexpr double kDefaultRankTol = 1e-9;
inline constexpr double kDefaultHurwitzMargin = 1e-9;

/// e^{Mt} by scaling-and-squaring with a Pade-13 approximant.
/// Throws NonFiniteError if the input or result is not finite.
Eigen::MatrixXd expm(const Eigen::MatrixXd& M, double t);

/// Count of singular values above tol_rel * (largest singular value).
/// The zero matrix has rank 0.
int numerical_rank(const Eigen::MatrixXd& M, double tol_rel = kDefaultRankTol);
int numerical_rank(const Eigen::MatrixXcd& M, double tol_rel = kDefaultRankTol);

struct HurwitzResult {
  bool hurwitz = false;
  double max_real_part = 0.0;
};

/// True iff every eigenvalue of M has real part < -margin.
HurwitzResult is_hurwitz(const Eigen::MatrixXd& M,
                         double margin = kDefaultHurwitzMargin);

/// A linear subspace of R^d held as a d x k matrix with orthonormal columns.
/// Grown by modified Gram-Schmidt with one reorthogonalization pass; a
/// candidate joins the basis iff its residual exceeds tol * its norm.
class Subspace {
 public:
  explicit Subspace(int ambient_dim, double tol = kDefaultRankTol);
  static Subspace full(int ambient_dim, double tol = kDefaultRankTol);
  static Subspace span_of(int ambient_dim,
                          const std::vector<Eigen::VectorXd>& vectors,
                          double tol = kDefaultRankTol);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  double tol() const { return tol_; }

  /// ||v - B B^T v||, the distance from v to the subspace.
  double residual(const Eigen::VectorXd& v) const;
  bool contains(const Eigen::VectorXd& v, double resid_tol) const;

  /// Appends the vectors that are not already (numerically) in the span.
  /// Returns the number of basis columns added.
  int grow(const std::vector<Eigen::VectorXd>& vectors);
  int grow(const Eigen::VectorXd& v);

 private:
  Eigen::MatrixXd basis_;  // ambient_dim x dim, orthonormal columns
  double tol_;
};

/// Orthonormalized span of S plus the given vectors; never shrinks.
Subspace span_grow(const Subspace& S, const std::vector<Eigen::VectorXd>& vectors);

/// S^perp; dim(result) = ambient_dim - dim(S).
Subspace orthogonal_complement(const Subspace& S);

}  // namespace filtstab
