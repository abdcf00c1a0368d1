#include "filtstab/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "filtstab/rng.hpp"
#include "io_util.hpp"

namespace filtstab {

std::vector<ModelError> validate_linear_model(const LinearModel& lm) {
  std::vector<ModelError> errs;
  const long n = lm.A.rows();
  if (n < 1 || lm.A.cols() != n)
    errs.push_back({"DimensionMismatch", "A must be square, n >= 1"});
  if (lm.B.rows() != n || lm.B.cols() < 1)
    errs.push_back({"DimensionMismatch", "B must have n rows"});
  if (lm.C.cols() != n || lm.C.rows() < 1)
    errs.push_back({"DimensionMismatch", "C must have n columns"});
  if (lm.x0_mean.size() != n || lm.x0_mean_alt.size() != n)
    errs.push_back({"DimensionMismatch", "initial means must have length n"});
  if (!errs.empty()) return errs;
  if (!lm.A.allFinite() || !lm.B.allFinite() || !lm.C.allFinite() ||
      !lm.P0.allFinite() || !lm.P0_alt.allFinite() ||
      !lm.x0_mean.allFinite() || !lm.x0_mean_alt.allFinite()) {
    errs.push_back({"NonFinite", "non-finite entries"});
    return errs;
  }
  auto check_spd = [&](const Eigen::MatrixXd& P, const char* name) {
    if (P.rows() != n || P.cols() != n) {
      errs.push_back({"DimensionMismatch", std::string(name) + " must be n x n"});
      return;
    }
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      errs.push_back({"NotSymmetric", name});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
      errs.push_back({"NotPositiveDefinite", name});
  };
  check_spd(lm.P0, "P0");
  check_spd(lm.P0_alt, "P0_alt");
  return errs;
}

HautusResult hautus_detectable(const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& C, double margin) {
  const long n = A.rows();
  if (n < 1 || A.cols() != n || C.cols() != n)
    throw std::invalid_argument("hautus_detectable: inconsistent dimensions");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw EigenFailure("hautus_detectable: eigenvalue iteration failed");

  std::vector<std::complex<double>> eigs(es.eigenvalues().data(),
                                         es.eigenvalues().data() + n);
  // deterministic witness: scan the least stable eigenvalues first
  std::sort(eigs.begin(), eigs.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              if (a.real() != b.real()) return a.real() > b.real();
              return a.imag() < b.imag();
            });

  const long p = C.rows();
  for (const std::complex<double>& lam : eigs) {
    if (lam.real() < -margin) break;  // sorted: the rest are stable
    Eigen::MatrixXcd stack(n + p, n);
    stack.topRows(n) =
        A.cast<std::complex<double>>() -
        lam * Eigen::MatrixXcd::Identity(n, n);
    stack.bottomRows(p) = C.cast<std::complex<double>>();
    if (numerical_rank(stack) < n) return {false, lam};
  }
  return {true, {0.0, 0.0}};
}

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) {
  return 0.5 * (M + M.transpose());
}

// symmetric PSD square root, negative roundoff eigenvalues clipped
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(S));
  if (es.info() != Eigen::Success)
    throw EigenFailure("psd_sqrt: eigenvalue iteration failed");
  const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

void check_psd(const Eigen::MatrixXd& P, double t) {
  std::ostringstream at;
  at << " at t=" << t;
  if (!P.allFinite())
    throw NonFiniteError("riccati_flow: non-finite covariance" + at.str());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw EigenFailure("riccati_flow: eigenvalue iteration failed" + at.str());
  if (es.eigenvalues().minCoeff() < -1e-6)
    throw PsdLost("riccati_flow: covariance left the PSD cone" + at.str() +
                  " (reduce dt)");
}

struct RiccatiStepper {
  const Eigen::MatrixXd& A;
  Eigen::MatrixXd BBt;
  Eigen::MatrixXd CtC;
  double dt;

  RiccatiStepper(const LinearModel& lm, double dt_in)
      : A(lm.A),
        BBt(lm.B * lm.B.transpose()),
        CtC(lm.C.transpose() * lm.C),
        dt(dt_in) {}

  Eigen::MatrixXd rhs(const Eigen::MatrixXd& P) const {
    return A * P + P * A.transpose() + BBt - P * CtC * P;
  }

  Eigen::MatrixXd step(const Eigen::MatrixXd& P) const {
    const Eigen::MatrixXd k1 = rhs(P);
    const Eigen::MatrixXd k2 = rhs(P + 0.5 * dt * k1);
    const Eigen::MatrixXd k3 = rhs(P + 0.5 * dt * k2);
    const Eigen::MatrixXd k4 = rhs(P + dt * k3);
    return symmetrize(P + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }
};

void check_flow_args(double t_max, double dt, int record_stride) {
  if (!(t_max > 0.0) || !(dt > 0.0) || dt > t_max || record_stride < 1)
    throw std::invalid_argument("riccati_flow: bad t_max/dt/record_stride");
  if (t_max / dt > 1e8)
    throw std::invalid_argument("riccati_flow: more than 10^8 grid steps");
}

}  // namespace

RiccatiTrace riccati_flow(const LinearModel& lm, double t_max, double dt,
                          int record_stride) {
  check_flow_args(t_max, dt, record_stride);
  const RiccatiStepper stepper(lm, dt);
  const long n_steps = std::llround(t_max / dt);

  RiccatiTrace trace;
  Eigen::MatrixXd P = lm.P0;
  Eigen::MatrixXd Pa = lm.P0_alt;
  auto record = [&](long k) {
    trace.times.push_back(static_cast<double>(k) * dt);
    trace.P_path.push_back(P);
    trace.P_alt_path.push_back(Pa);
    trace.gap.push_back((P - Pa).norm());
  };
  record(0);
  for (long k = 1; k <= n_steps; ++k) {
    P = stepper.step(P);
    Pa = stepper.step(Pa);
    const double t = static_cast<double>(k) * dt;
    check_psd(P, t);
    check_psd(Pa, t);
    if (k % record_stride == 0 || k == n_steps) record(k);
  }
  return trace;
}

KalmanPairSummary kalman_pair_experiment(const LinearModel& lm, double t_max,
                                         double dt, int n_paths,
                                         std::uint64_t seed, int record_stride,
                                         int threads) {
  check_flow_args(t_max, dt, record_stride);
  if (n_paths < 1)
    throw std::invalid_argument("kalman_pair_experiment: n_paths must be >= 1");
  {
    const auto errs = validate_linear_model(lm);
    if (!errs.empty())
      throw std::invalid_argument("kalman_pair_experiment: " +
                                  errs.front().code + " " + errs.front().detail);
  }
  const HautusResult haut = hautus_detectable(lm.A, lm.C);
  if (!haut.detectable) {
    std::ostringstream os;
    os << "kalman_pair_experiment: (A, C) fails the detectability test, "
          "witness eigenvalue "
       << haut.witness.real();
    if (haut.witness.imag() != 0.0) os << (haut.witness.imag() > 0 ? "+" : "")
                                       << haut.witness.imag() << "i";
    throw NotDetectable(os.str());
  }

  const long n = lm.A.rows();
  const long p = lm.C.rows();
  const long n_steps = std::llround(t_max / dt);
  std::vector<long> recs;
  for (long k = 0; k <= n_steps; k += record_stride) recs.push_back(k);
  if (recs.back() != n_steps) recs.push_back(n_steps);

  // one Riccati sweep supplies the gains for every path
  const RiccatiStepper stepper(lm, dt);
  std::vector<Eigen::MatrixXd> gain(static_cast<size_t>(n_steps));
  std::vector<Eigen::MatrixXd> gain_alt(static_cast<size_t>(n_steps));
  KalmanPairSummary out;
  {
    Eigen::MatrixXd P = lm.P0;
    Eigen::MatrixXd Pa = lm.P0_alt;
    size_t rec_i = 0;
    for (long k = 0; k <= n_steps; ++k) {
      if (rec_i < recs.size() && recs[rec_i] == k) {
        out.times.push_back(static_cast<double>(k) * dt);
        out.gap.push_back((P - Pa).norm());
        ++rec_i;
      }
      if (k == n_steps) break;
      gain[static_cast<size_t>(k)] = P * lm.C.transpose();
      gain_alt[static_cast<size_t>(k)] = Pa * lm.C.transpose();
      P = stepper.step(P);
      Pa = stepper.step(Pa);
      const double t = static_cast<double>(k + 1) * dt;
      check_psd(P, t);
      check_psd(Pa, t);
    }
  }

  // exact Gaussian transition for the signal: x -> Ad x + Lq xi
  const Eigen::MatrixXd Ad = expm(lm.A, dt);
  Eigen::MatrixXd block(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -lm.A;
  block.topRightCorner(n, n) = lm.B * lm.B.transpose();
  block.bottomLeftCorner(n, n).setZero();
  block.bottomRightCorner(n, n) = lm.A.transpose();
  const Eigen::MatrixXd E = expm(block, dt);
  const Eigen::MatrixXd Qd = Ad * E.topRightCorner(n, n);
  const Eigen::MatrixXd Lq = psd_sqrt(Qd);
  const Eigen::MatrixXd L0 = psd_sqrt(lm.P0);

  const double sq_dt = std::sqrt(dt);
  const size_t n_rec = recs.size();
  std::vector<std::vector<double>> per_path(static_cast<size_t>(n_paths));

  auto run_path = [&](int i) {
    PathRng rng(seed, static_cast<std::uint64_t>(i));
    auto normal_vec = [&rng](long k) {
      Eigen::VectorXd v(k);
      for (long a = 0; a < k; ++a) v[a] = rng.normal();
      return v;
    };
    Eigen::VectorXd x = lm.x0_mean + L0 * normal_vec(n);
    Eigen::VectorXd xh = lm.x0_mean;
    Eigen::VectorXd xa = lm.x0_mean_alt;
    std::vector<double> rec_vals;
    rec_vals.reserve(n_rec);
    size_t rec_i = 0;
    for (long k = 0; k <= n_steps; ++k) {
      if (rec_i < n_rec && recs[rec_i] == k) {
        rec_vals.push_back((xh - xa).norm());
        ++rec_i;
      }
      if (k == n_steps) break;
      const Eigen::VectorXd dY = lm.C * x * dt + sq_dt * normal_vec(p);
      xh += lm.A * xh * dt +
            gain[static_cast<size_t>(k)] * (dY - lm.C * xh * dt);
      xa += lm.A * xa * dt +
            gain_alt[static_cast<size_t>(k)] * (dY - lm.C * xa * dt);
      x = Ad * x + Lq * normal_vec(n);
    }
    per_path[static_cast<size_t>(i)] = std::move(rec_vals);
  };

  if (threads > 1) {
    std::vector<std::exception_ptr> errs(static_cast<size_t>(n_paths));
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int i = 0; i < n_paths; ++i) {
      try {
        run_path(i);
      } catch (...) {
        errs[static_cast<size_t>(i)] = std::current_exception();
      }
    }
    for (const auto& e : errs)
      if (e) std::rethrow_exception(e);
  } else {
    for (int i = 0; i < n_paths; ++i) run_path(i);
  }

  out.mean_xdiff.resize(n_rec);
  for (size_t r = 0; r < n_rec; ++r) {
    double sum = 0.0;
    for (int i = 0; i < n_paths; ++i)  // path order, fixed
      sum += per_path[static_cast<size_t>(i)][r];
    out.mean_xdiff[r] = sum / static_cast<double>(n_paths);
  }

  // recorded index closest to t_max/2
  size_t half = 0;
  for (size_t r = 0; r < n_rec; ++r)
    if (std::abs(out.times[r] - 0.5 * t_max) <
        std::abs(out.times[half] - 0.5 * t_max))
      half = r;
  out.tail_decreasing = out.mean_xdiff.back() < out.mean_xdiff[half];
  return out;
}

bool exp_decay_convolution_check(const std::vector<double>& f_samples,
                                 double dt, double lambda) {
  if (!(lambda > 0.0) || !(dt > 0.0))
    throw std::invalid_argument(
        "exp_decay_convolution_check: lambda and dt must be > 0");
  const double decay = std::exp(-lambda * dt);
  const double half = std::exp(-0.5 * lambda * dt);
  double g = 0.0;
  double peak = 0.0;
  for (size_t k = 0; k + 1 < f_samples.size(); ++k) {
    g = decay * g + half * 0.5 * (f_samples[k] + f_samples[k + 1]) * dt;
    peak = std::max(peak, std::abs(g));
  }
  return std::abs(g) < 1e-3 * (peak + 1e-12);
}

std::optional<LinearModel> linear_model_from_json(
    const nlohmann::json& j, std::vector<ModelError>& errs) {
  if (!detail::check_fields(
          j, {"A", "B", "C", "P0", "P0_alt", "x0_mean", "x0_mean_alt"}, errs))
    return std::nullopt;
  LinearModel lm;
  if (!detail::read_matrix(j["A"], lm.A, errs, "A")) return std::nullopt;
  if (!detail::read_matrix(j["B"], lm.B, errs, "B")) return std::nullopt;
  if (!detail::read_matrix(j["C"], lm.C, errs, "C")) return std::nullopt;
  if (!detail::read_matrix(j["P0"], lm.P0, errs, "P0")) return std::nullopt;
  if (!detail::read_matrix(j["P0_alt"], lm.P0_alt, errs, "P0_alt"))
    return std::nullopt;
  if (!detail::read_vector(j["x0_mean"], lm.x0_mean, errs, "x0_mean"))
    return std::nullopt;
  if (!detail::read_vector(j["x0_mean_alt"], lm.x0_mean_alt, errs,
                           "x0_mean_alt"))
    return std::nullopt;
  const auto model_errs = validate_linear_model(lm);
  if (!model_errs.empty()) {
    errs.insert(errs.end(), model_errs.begin(), model_errs.end());
    return std::nullopt;
  }
  return lm;
}

nlohmann::json linear_model_to_json(const LinearModel& lm) {
  nlohmann::json j;
  j["A"] = detail::matrix_to_json(lm.A);
  j["B"] = detail::matrix_to_json(lm.B);
  j["C"] = detail::matrix_to_json(lm.C);
  j["P0"] = detail::matrix_to_json(lm.P0);
  j["P0_alt"] = detail::matrix_to_json(lm.P0_alt);
  j["x0_mean"] = detail::vector_to_json(lm.x0_mean);
  j["x0_mean_alt"] = detail::vector_to_json(lm.x0_mean_alt);
  return j;
}

namespace {

std::vector<LinearPreset> make_linear_presets() {
  std::vector<LinearPreset> ps;

  LinearModel k1;
  k1.A = Eigen::MatrixXd::Zero(1, 1);
  k1.B = Eigen::MatrixXd::Zero(1, 1);
  k1.C = Eigen::MatrixXd::Ones(1, 1);
  k1.P0 = Eigen::MatrixXd::Ones(1, 1);
  k1.P0_alt = 4.0 * Eigen::MatrixXd::Ones(1, 1);
  k1.x0_mean = Eigen::VectorXd::Zero(1);
  k1.x0_mean_alt = 5.0 * Eigen::VectorXd::Ones(1);
  ps.push_back({"K1", "scalar drift-free pair with a closed-form error flow",
                std::move(k1)});

  Eigen::MatrixXd A2(2, 2);
  A2 << 1, 0, 0, -1;

  LinearModel k2;
  k2.A = A2;
  k2.B = Eigen::MatrixXd::Identity(2, 2);
  k2.C = Eigen::MatrixXd(1, 2);
  k2.C << 0, 1;
  k2.P0 = Eigen::MatrixXd::Identity(2, 2);
  k2.P0_alt = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  k2.x0_mean = Eigen::VectorXd::Zero(2);
  k2.x0_mean_alt = Eigen::VectorXd::Ones(2);
  ps.push_back({"K2", "unstable mode hidden from the observation: refused",
                std::move(k2)});

  LinearModel k3;
  k3.A = A2;
  k3.B = Eigen::MatrixXd::Identity(2, 2);
  k3.C = Eigen::MatrixXd(1, 2);
  k3.C << 1, 0;
  k3.P0 = Eigen::MatrixXd::Identity(2, 2);
  k3.P0_alt = Eigen::MatrixXd(2, 2);
  k3.P0_alt << 4, 0, 0, 1;
  k3.x0_mean = Eigen::VectorXd::Zero(2);
  k3.x0_mean_alt = Eigen::VectorXd(2);
  k3.x0_mean_alt << 3, -2;
  ps.push_back({"K3", "unstable mode observed: two-state detectable pair",
                std::move(k3)});
  return ps;
}

}  // namespace

const std::vector<LinearPreset>& builtin_linear_presets() {
  static const std::vector<LinearPreset> presets = make_linear_presets();
  return presets;
}

const LinearPreset* find_linear_preset(const std::string& name) {
  for (const LinearPreset& p : builtin_linear_presets())
    if (p.name == name) return &p;
  return nullptr;
}

void write_kalman_trace_csv(std::ostream& os, const KalmanPairSummary& s) {
  os << "t,gap,mean_xdiff\r\n";
  for (size_t k = 0; k < s.times.size(); ++k)
    os << detail::fmt_g17(s.times[k]) << ',' << detail::fmt_g17(s.gap[k])
       << ',' << detail::fmt_g17(s.mean_xdiff[k]) << "\r\n";
}

std::string kalman_summary_to_json_string(const KalmanPairSummary& s) {
  std::string out = "{";
  detail::append_json_array(out, "times", s.times);
  out += ',';
  detail::append_json_array(out, "gap", s.gap);
  out += ',';
  detail::append_json_array(out, "mean_xdiff", s.mean_xdiff);
  out += ",\"tail_decreasing\":";
  out += s.tail_decreasing ? "true" : "false";
  out += '}';
  return out;
}

}  // namespace filtstab
