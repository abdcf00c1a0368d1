#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "filtstab/model.hpp"
#include "filtstab/rng.hpp"

namespace filtstab {

struct SimConfig {
  double t_max = 10.0;
  double dt = 1e-3;
  int n_paths = 1;
  std::uint64_t seed = 0;
  int record_stride = 1;
};

std::vector<ModelError> validate_config(const SimConfig& cfg);

/// dt = 1e-3 * min(1, 1/max|L_ii|, kappa^2/max h^2), floored at 1e-6.
double default_dt(const FiniteHmm& m);

/// Piecewise-constant jump path: state states[k] holds on
/// [times[k], times[k+1]), and states.back() from times.back() to the horizon.
struct JumpPath {
  std::vector<double> times;   // times[0] = 0
  std::vector<int> states;
};

/// Exponential holding times with rate -L_ii and jump law L_ij / (-L_ii).
JumpPath simulate_signal(const FiniteHmm& m, int x0, double horizon,
                         PathRng& rng);

/// Integral of h over the path between two times (exact from jump times).
double integrate_h(const FiniteHmm& m, const JumpPath& path, double t0,
                   double t1);

/// Observation increments on the uniform grid {k dt}:
/// white noise  dY_k = int h dt + kappa sqrt(dt) xi_k,
/// counting     dY_k = Poisson(int h dt).
std::vector<double> simulate_observations(const FiniteHmm& m,
                                          const JumpPath& path, int n_steps,
                                          double dt, PathRng& rng);

/// Bayes correction only: reweights pi by the per-step observation
/// likelihood and renormalizes. Weights are exponent-shifted so they never
/// all underflow; throws DegenerateWeight if the total mass is exactly zero.
Eigen::VectorXd filter_correct(const FiniteHmm& m, const Eigen::VectorXd& pi,
                               double dY, double dt);

/// One splitting step of the filter: exact prediction by e^{L^T dt},
/// then the Bayes correction. Simplex-preserving by construction.
Eigen::VectorXd filter_step(const FiniteHmm& m, const Eigen::VectorXd& pi,
                            double dY, double dt);

/// Precomputed-transition form of filter_step for tight loops.
class FilterStepper {
 public:
  FilterStepper(const FiniteHmm& m, double dt);
  Eigen::VectorXd predict(const Eigen::VectorXd& pi) const;
  Eigen::VectorXd step(const Eigen::VectorXd& pi, double dY) const;
  double dt() const { return dt_; }

 private:
  const FiniteHmm& model_;
  double dt_;
  Eigen::MatrixXd transition_;  // e^{L^T dt}, negatives clamped
};

struct FilterPairTrajectory {
  std::vector<double> times;
  std::vector<int> signal_states;        // state at each recorded time
  std::vector<double> obs_increments;    // increment over the step ending here
  std::vector<Eigen::VectorXd> pi_mu;
  std::vector<Eigen::VectorXd> pi_nu;
  std::vector<double> tv;                // 0.5 * l1 distance
};

struct PairSummary {
  std::vector<double> checkpoints;       // grid-snapped times, last = t_max
  std::vector<double> mean_tv;
  std::vector<double> median_tv;
  std::vector<double> q90_tv;
  std::vector<double> terminal_tv;       // per-path tv at the final time
};

struct RunPairResult {
  std::vector<FilterPairTrajectory> recorded;  // first n_record paths
  PairSummary summary;
};

/// 16 log-spaced checkpoint times in [t_max/100, t_max], snapped to the grid
/// and deduplicated.
std::vector<long> checkpoint_steps(double t_max, double dt);

/// Simulates one signal/observation path per Monte-Carlo path and runs the
/// two filters started from (mu, nu) on the identical increments. The signal
/// initial state is drawn from mu. Path i consumes only stream i of the
/// seed, and aggregation runs in path order, so the result is a pure
/// function of the inputs regardless of `threads`.
RunPairResult run_pair(const FiniteHmm& m, const InitialPair& init,
                       const SimConfig& cfg, int n_record = 0,
                       int threads = 1);

/// Plain-loop reference implementation, kept as the comparison point for
/// the OpenMP kernel.
RunPairResult run_pair_serial(const FiniteHmm& m, const InitialPair& init,
                              const SimConfig& cfg, int n_record = 0);

struct KappaSweepRow {
  double kappa;
  double mean_terminal_tv;
};

/// run_pair per kappa with a common seed; white-noise models only.
std::vector<KappaSweepRow> kappa_sweep(const FiniteHmm& m,
                                       const InitialPair& init,
                                       const std::vector<double>& kappas,
                                       const SimConfig& cfg, int threads = 1);

/// Byte-stable writers shared by the CLI and the acceptance suite.
std::string summary_to_json_string(const PairSummary& s);
void write_trajectory_csv(std::ostream& os, const FilterPairTrajectory& tr);
std::string sweep_to_json_string(const std::vector<KappaSweepRow>& rows);

}  // namespace filtstab
