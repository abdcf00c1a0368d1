#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "filtstab/model.hpp"
#include "filtstab/numlin.hpp"

namespace filtstab {

/// Linear signal-observation model dX = AX dt + B dW, dY = CX dt + dB,
/// with a pair of Gaussian priors (x0_mean, P0) and (x0_mean_alt, P0_alt).
struct LinearModel {
  Eigen::MatrixXd A;       // n x n
  Eigen::MatrixXd B;       // n x m
  Eigen::MatrixXd C;       // p x n
  Eigen::MatrixXd P0;      // n x n SPD
  Eigen::MatrixXd P0_alt;  // n x n SPD
  Eigen::VectorXd x0_mean;
  Eigen::VectorXd x0_mean_alt;
};

std::vector<ModelError> validate_linear_model(const LinearModel& lm);

struct HautusResult {
  bool detectable = false;
  std::complex<double> witness;  // first failing eigenvalue when not detectable
};

/// Hautus test: every eigenvalue of A with Re >= -margin must make
/// [A - lambda I; C] full column rank.
HautusResult hautus_detectable(const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& C,
                               double margin = kDefaultHurwitzMargin);

struct RiccatiTrace {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> P_path;
  std::vector<Eigen::MatrixXd> P_alt_path;
  std::vector<double> gap;  // Frobenius norm of P - P'
};

/// RK4 on dP/dt = AP + PA^T + BB^T - P C^T C P from both P0 and P0_alt,
/// symmetrizing each step. Throws PsdLost when an eigenvalue drops
/// below -1e-6 (the step size is too large).
RiccatiTrace riccati_flow(const LinearModel& lm, double t_max, double dt,
                          int record_stride = 1);

struct KalmanPairSummary {
  std::vector<double> times;       // recorded times
  std::vector<double> gap;         // ||P - P'||_F on the same grid
  std::vector<double> mean_xdiff;  // Monte-Carlo mean of ||xhat - xhat'||
  bool tail_decreasing = false;    // mean_xdiff(t_max) < mean_xdiff(t_max/2)
};

/// Simulates the signal exactly per step (discretized A, B), the observation
/// increments, and the two Kalman recursions with gains P_t C^T and P'_t C^T.
/// Refuses non-detectable pairs. Same determinism contract as run_pair.
KalmanPairSummary kalman_pair_experiment(const LinearModel& lm, double t_max,
                                         double dt, int n_paths,
                                         std::uint64_t seed,
                                         int record_stride = 1,
                                         int threads = 1);

/// Convolution g(T) = int_0^T e^{-lambda (T-t)} f(t) dt on the sample grid;
/// true iff the final value falls below 1e-3 * (peak |g| + 1e-12).
bool exp_decay_convolution_check(const std::vector<double>& f_samples,
                                 double dt, double lambda);

/// JSON schema {"A","B","C","P0","P0_alt","x0_mean","x0_mean_alt"};
/// matrices as arrays of rows. Unknown fields rejected.
std::optional<LinearModel> linear_model_from_json(const nlohmann::json& j,
                                                  std::vector<ModelError>& errs);
nlohmann::json linear_model_to_json(const LinearModel& lm);

struct LinearPreset {
  std::string name;
  std::string description;
  LinearModel model;
};

const std::vector<LinearPreset>& builtin_linear_presets();
const LinearPreset* find_linear_preset(const std::string& name);

/// CSV `t,gap,mean_xdiff` and summary JSON writers (byte-stable).
void write_kalman_trace_csv(std::ostream& os, const KalmanPairSummary& s);
std::string kalman_summary_to_json_string(const KalmanPairSummary& s);

}  // namespace filtstab
