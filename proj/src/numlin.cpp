#include "filtstab/numlin.hpp"

#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace filtstab {

Eigen::MatrixXd expm(const Eigen::MatrixXd& M, double t) {
  if (!M.allFinite() || !std::isfinite(t))
    throw NonFiniteError("expm: non-finite input");
  Eigen::MatrixXd result = (M * t).exp();
  if (!result.allFinite()) throw NonFiniteError("expm: non-finite result");
  return result;
}

namespace {

template <typename Matrix>
int rank_by_svd(const Matrix& M, double tol_rel) {
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cutoff = tol_rel * sv[0];
  int rank = 0;
  for (long i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank;
  return rank;
}

}  // namespace

int numerical_rank(const Eigen::MatrixXd& M, double tol_rel) {
  return rank_by_svd(M, tol_rel);
}

int numerical_rank(const Eigen::MatrixXcd& M, double tol_rel) {
  return rank_by_svd(M, tol_rel);
}

HurwitzResult is_hurwitz(const Eigen::MatrixXd& M, double margin) {
  if (M.rows() < 1 || M.rows() != M.cols())
    throw std::invalid_argument("is_hurwitz: needs a square matrix, k >= 1");
  if (!M.allFinite()) throw NonFiniteError("is_hurwitz: non-finite input");
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw EigenFailure("is_hurwitz: eigenvalue iteration failed");
  const double max_re = es.eigenvalues().real().maxCoeff();
  return {max_re < -margin, max_re};
}

Subspace::Subspace(int ambient_dim, double tol)
    : basis_(ambient_dim, 0), tol_(tol) {
  if (ambient_dim < 1)
    throw std::invalid_argument("Subspace: ambient_dim must be >= 1");
}

Subspace Subspace::full(int ambient_dim, double tol) {
  Subspace s(ambient_dim, tol);
  s.basis_ = Eigen::MatrixXd::Identity(ambient_dim, ambient_dim);
  return s;
}

Subspace Subspace::span_of(int ambient_dim,
                           const std::vector<Eigen::VectorXd>& vectors,
                           double tol) {
  Subspace s(ambient_dim, tol);
  s.grow(vectors);
  return s;
}

double Subspace::residual(const Eigen::VectorXd& v) const {
  if (dim() == 0) return v.norm();
  return (v - basis_ * (basis_.transpose() * v)).norm();
}

bool Subspace::contains(const Eigen::VectorXd& v, double resid_tol) const {
  return residual(v) <= resid_tol;
}

int Subspace::grow(const std::vector<Eigen::VectorXd>& vectors) {
  int added = 0;
  for (const Eigen::VectorXd& v : vectors) added += grow(v);
  return added;
}

int Subspace::grow(const Eigen::VectorXd& v) {
  if (v.size() != basis_.rows())
    throw std::invalid_argument("Subspace::grow: vector length mismatch");
  const double nv = v.norm();
  if (nv == 0.0) return 0;
  Eigen::VectorXd w = v;
  // modified Gram-Schmidt, two passes ("twice is enough")
  for (int pass = 0; pass < 2; ++pass)
    if (basis_.cols() > 0) w -= basis_ * (basis_.transpose() * w);
  const double res = w.norm();
  if (res <= tol_ * nv) return 0;
  basis_.conservativeResize(Eigen::NoChange, basis_.cols() + 1);
  basis_.col(basis_.cols() - 1) = w / res;
  return 1;
}

Subspace span_grow(const Subspace& S,
                   const std::vector<Eigen::VectorXd>& vectors) {
  Subspace out = S;
  out.grow(vectors);
  return out;
}

Subspace orthogonal_complement(const Subspace& S) {
  const int d = S.ambient_dim();
  const int k = S.dim();
  if (k == 0) return Subspace::full(d, S.tol());
  Subspace out(d, S.tol());
  if (k == d) return out;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(S.basis());
  const Eigen::MatrixXd Q = qr.householderQ();
  std::vector<Eigen::VectorXd> cols;
  cols.reserve(static_cast<size_t>(d - k));
  for (int j = k; j < d; ++j) {
    // one explicit projection pass on top of the Householder product
    Eigen::VectorXd w = Q.col(j);
    w -= S.basis() * (S.basis().transpose() * w);
    cols.push_back(w);
  }
  out.grow(cols);
  return out;
}

}  // namespace filtstab
