#include "filtstab/wonham.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "filtstab/chain.hpp"
#include "filtstab/numlin.hpp"
#include "io_util.hpp"

namespace filtstab {

std::vector<ModelError> validate_config(const SimConfig& cfg) {
  std::vector<ModelError> errs;
  if (!(cfg.t_max > 0.0)) errs.push_back({"BadConfig", "t_max must be > 0"});
  if (!(cfg.dt > 0.0)) errs.push_back({"BadConfig", "dt must be > 0"});
  if (cfg.dt > cfg.t_max) errs.push_back({"BadConfig", "dt exceeds t_max"});
  if (cfg.t_max > 0.0 && cfg.dt > 0.0 && cfg.t_max / cfg.dt > 1e8)
    errs.push_back({"BadConfig", "more than 10^8 grid steps"});
  if (cfg.n_paths < 1) errs.push_back({"BadConfig", "n_paths must be >= 1"});
  if (cfg.record_stride < 1)
    errs.push_back({"BadConfig", "record_stride must be >= 1"});
  return errs;
}

double default_dt(const FiniteHmm& m) {
  double scale = 1.0;
  const double max_rate = m.generator.diagonal().cwiseAbs().maxCoeff();
  if (max_rate > 0.0) scale = std::min(scale, 1.0 / max_rate);
  const double max_h2 = m.h.cwiseAbs2().maxCoeff();
  // keeps the correction exponent O(dt); for counting kind the exponent is
  // h*dt, which the 1/max_rate-style cap below covers
  if (m.obs_kind == ObsKind::white_noise && max_h2 > 0.0)
    scale = std::min(scale, m.kappa * m.kappa / max_h2);
  else if (max_h2 > 0.0)
    scale = std::min(scale, 1.0 / std::sqrt(max_h2));
  return std::max(1e-6, 1e-3 * scale);
}

JumpPath simulate_signal(const FiniteHmm& m, int x0, double horizon,
                         PathRng& rng) {
  JumpPath p;
  p.times.push_back(0.0);
  p.states.push_back(x0);
  double t = 0.0;
  int x = x0;
  while (true) {
    const double rate = -m.generator(x, x);
    if (rate <= kEdgeThreshold) break;  // absorbing
    t += rng.exponential(rate);
    if (t >= horizon) break;
    Eigen::VectorXd w = m.generator.row(x).transpose().cwiseMax(0.0);
    w[x] = 0.0;
    x = rng.categorical(w);
    p.times.push_back(t);
    p.states.push_back(x);
  }
  return p;
}

double integrate_h(const FiniteHmm& m, const JumpPath& path, double t0,
                   double t1) {
  if (!(t1 > t0)) return 0.0;
  const auto& ts = path.times;
  const size_t n = ts.size();
  size_t k = static_cast<size_t>(
      std::upper_bound(ts.begin(), ts.end(), t0) - ts.begin());
  if (k > 0) --k;
  double acc = 0.0;
  for (; k < n; ++k) {
    const double lo = std::max(ts[k], t0);
    const double seg_end =
        k + 1 < n ? ts[k + 1] : std::numeric_limits<double>::infinity();
    const double hi = std::min(seg_end, t1);
    if (hi > lo) acc += m.h[path.states[k]] * (hi - lo);
    if (seg_end >= t1) break;
  }
  return acc;
}

std::vector<double> simulate_observations(const FiniteHmm& m,
                                          const JumpPath& path, int n_steps,
                                          double dt, PathRng& rng) {
  std::vector<double> dy(static_cast<size_t>(n_steps));
  const double noise = m.kappa * std::sqrt(dt);
  for (int k = 0; k < n_steps; ++k) {
    const double drift = integrate_h(m, path, k * dt, (k + 1) * dt);
    if (m.obs_kind == ObsKind::white_noise)
      dy[static_cast<size_t>(k)] = drift + noise * rng.normal();
    else
      dy[static_cast<size_t>(k)] = static_cast<double>(rng.poisson(drift));
  }
  return dy;
}

Eigen::VectorXd filter_correct(const FiniteHmm& m, const Eigen::VectorXd& pi,
                               double dY, double dt) {
  const int d = m.d;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd expo(d);
  if (m.obs_kind == ObsKind::white_noise) {
    if (!(m.kappa > 0.0))
      throw std::invalid_argument(
          "filter_correct: white-noise correction needs kappa > 0");
    const double k2 = m.kappa * m.kappa;
    for (int i = 0; i < d; ++i)
      expo[i] = (m.h[i] * dY - 0.5 * m.h[i] * m.h[i] * dt) / k2;
  } else {
    const long dn = std::lround(dY);
    for (int i = 0; i < d; ++i) {
      if (m.h[i] > 0.0)
        expo[i] = static_cast<double>(dn) * std::log(m.h[i]) - m.h[i] * dt;
      else
        expo[i] = dn > 0 ? neg_inf : 0.0;
    }
  }
  // shift by the largest exponent that carries prior mass, so the weights
  // cannot all underflow
  double shift = neg_inf;
  for (int i = 0; i < d; ++i)
    if (pi[i] > 0.0 && expo[i] > shift) shift = expo[i];
  if (shift == neg_inf)
    throw DegenerateWeight(
        "filter_correct: every state with prior mass has zero likelihood");
  Eigen::VectorXd w(d);
  for (int i = 0; i < d; ++i)
    w[i] = pi[i] > 0.0 && expo[i] > neg_inf
               ? pi[i] * std::exp(expo[i] - shift)
               : 0.0;
  const double total = w.sum();
  if (!(total > 0.0))
    throw DegenerateWeight("filter_correct: zero total weight");
  return w / total;
}

FilterStepper::FilterStepper(const FiniteHmm& m, double dt)
    : model_(m),
      dt_(dt),
      transition_(expm(m.generator.transpose(), dt).cwiseMax(0.0)) {}

Eigen::VectorXd FilterStepper::predict(const Eigen::VectorXd& pi) const {
  Eigen::VectorXd p = transition_ * pi;
  return p / p.sum();
}

Eigen::VectorXd FilterStepper::step(const Eigen::VectorXd& pi,
                                    double dY) const {
  return filter_correct(model_, predict(pi), dY, dt_);
}

Eigen::VectorXd filter_step(const FiniteHmm& m, const Eigen::VectorXd& pi,
                            double dY, double dt) {
  return FilterStepper(m, dt).step(pi, dY);
}

std::vector<long> checkpoint_steps(double t_max, double dt) {
  const long n_steps = std::llround(t_max / dt);
  std::vector<long> steps;
  for (int j = 0; j < 16; ++j) {
    const double t =
        (t_max / 100.0) * std::pow(100.0, static_cast<double>(j) / 15.0);
    long k = std::llround(t / dt);
    k = std::max(1L, std::min(k, n_steps));
    if (steps.empty() || k > steps.back()) steps.push_back(k);
  }
  if (steps.back() != n_steps) steps.push_back(n_steps);
  return steps;
}

namespace {

double tv_dist(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return 0.5 * (a - b).lpNorm<1>();
}

struct PathOutcome {
  std::vector<double> cp_tv;
  double terminal_tv = 0.0;
  FilterPairTrajectory traj;  // filled only for recorded paths
};

PathOutcome run_one_path(const FiniteHmm& m, const InitialPair& init,
                         const SimConfig& cfg, const FilterStepper& stepper,
                         const std::vector<long>& cps, long n_steps,
                         std::uint64_t path_index, bool record) {
  PathOutcome out;
  out.cp_tv.reserve(cps.size());
  PathRng rng(cfg.seed, path_index);
  const int x0 = rng.categorical(init.mu);
  const JumpPath path = simulate_signal(m, x0, cfg.t_max, rng);
  const std::vector<double> dy = simulate_observations(
      m, path, static_cast<int>(n_steps), cfg.dt, rng);

  Eigen::VectorXd pm = init.mu;
  Eigen::VectorXd pn = init.nu;
  size_t cp_i = 0;
  size_t seg = 0;
  auto state_at = [&](double t) {
    while (seg + 1 < path.times.size() && path.times[seg + 1] <= t) ++seg;
    return path.states[seg];
  };
  auto record_row = [&](long k, double dYk) {
    const double t = static_cast<double>(k) * cfg.dt;
    out.traj.times.push_back(t);
    out.traj.signal_states.push_back(state_at(t));
    out.traj.obs_increments.push_back(dYk);
    out.traj.pi_mu.push_back(pm);
    out.traj.pi_nu.push_back(pn);
    out.traj.tv.push_back(tv_dist(pm, pn));
  };
  if (record) record_row(0, 0.0);
  for (long k = 1; k <= n_steps; ++k) {
    const double dYk = dy[static_cast<size_t>(k - 1)];
    pm = stepper.step(pm, dYk);
    pn = stepper.step(pn, dYk);
    if (cp_i < cps.size() && cps[cp_i] == k) {
      out.cp_tv.push_back(tv_dist(pm, pn));
      ++cp_i;
    }
    if (record && (k % cfg.record_stride == 0 || k == n_steps))
      record_row(k, dYk);
  }
  out.terminal_tv = tv_dist(pm, pn);
  return out;
}

double sorted_median(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sorted_q90(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  const size_t idx = std::min(
      n - 1, static_cast<size_t>(std::ceil(0.9 * static_cast<double>(n))) - 1);
  return v[idx];
}

RunPairResult aggregate(std::vector<PathOutcome>& outs,
                        const std::vector<long>& cps, const SimConfig& cfg,
                        int n_record) {
  RunPairResult res;
  PairSummary& s = res.summary;
  for (long k : cps) s.checkpoints.push_back(static_cast<double>(k) * cfg.dt);
  const size_t ncp = cps.size();
  const size_t np = outs.size();
  std::vector<double> col(np);
  for (size_t c = 0; c < ncp; ++c) {
    double sum = 0.0;
    for (size_t i = 0; i < np; ++i) {  // path order, fixed
      col[i] = outs[i].cp_tv[c];
      sum += col[i];
    }
    s.mean_tv.push_back(sum / static_cast<double>(np));
    std::vector<double> sorted = col;
    s.median_tv.push_back(sorted_median(sorted));
    s.q90_tv.push_back(sorted_q90(sorted));
  }
  s.terminal_tv.reserve(np);
  for (const PathOutcome& o : outs) s.terminal_tv.push_back(o.terminal_tv);
  for (int i = 0; i < n_record && i < static_cast<int>(np); ++i)
    res.recorded.push_back(std::move(outs[static_cast<size_t>(i)].traj));
  return res;
}

RunPairResult run_pair_impl(const FiniteHmm& m, const InitialPair& init,
                            const SimConfig& cfg, int n_record, int threads) {
  {
    const auto errs = validate_config(cfg);
    if (!errs.empty())
      throw std::invalid_argument("run_pair: " + errs.front().detail);
  }
  const long n_steps = std::llround(cfg.t_max / cfg.dt);
  const std::vector<long> cps = checkpoint_steps(cfg.t_max, cfg.dt);
  const FilterStepper stepper(m, cfg.dt);

  std::vector<PathOutcome> outs(static_cast<size_t>(cfg.n_paths));
  std::vector<std::exception_ptr> errs(static_cast<size_t>(cfg.n_paths));
  if (threads > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int i = 0; i < cfg.n_paths; ++i) {
      try {
        outs[static_cast<size_t>(i)] =
            run_one_path(m, init, cfg, stepper, cps, n_steps,
                         static_cast<std::uint64_t>(i), i < n_record);
      } catch (...) {
        errs[static_cast<size_t>(i)] = std::current_exception();
      }
    }
    for (const auto& e : errs)
      if (e) std::rethrow_exception(e);
  } else {
    for (int i = 0; i < cfg.n_paths; ++i)
      outs[static_cast<size_t>(i)] =
          run_one_path(m, init, cfg, stepper, cps, n_steps,
                       static_cast<std::uint64_t>(i), i < n_record);
  }
  return aggregate(outs, cps, cfg, n_record);
}

}  // namespace

RunPairResult run_pair(const FiniteHmm& m, const InitialPair& init,
                       const SimConfig& cfg, int n_record, int threads) {
  return run_pair_impl(m, init, cfg, n_record, threads);
}

RunPairResult run_pair_serial(const FiniteHmm& m, const InitialPair& init,
                              const SimConfig& cfg, int n_record) {
  return run_pair_impl(m, init, cfg, n_record, 1);
}

std::vector<KappaSweepRow> kappa_sweep(const FiniteHmm& m,
                                       const InitialPair& init,
                                       const std::vector<double>& kappas,
                                       const SimConfig& cfg, int threads) {
  if (m.obs_kind != ObsKind::white_noise)
    throw std::invalid_argument("kappa_sweep: white-noise models only");
  std::vector<KappaSweepRow> rows;
  rows.reserve(kappas.size());
  for (double kap : kappas) {
    if (!(kap > 0.0))
      throw std::invalid_argument("kappa_sweep: kappa values must be > 0");
    FiniteHmm mk = m;
    mk.kappa = kap;
    const RunPairResult r = run_pair(mk, init, cfg, 0, threads);
    double sum = 0.0;
    for (double tv : r.summary.terminal_tv) sum += tv;
    rows.push_back(
        {kap, sum / static_cast<double>(r.summary.terminal_tv.size())});
  }
  return rows;
}

using detail::append_json_array;
using detail::fmt_g17;

std::string summary_to_json_string(const PairSummary& s) {
  std::string out = "{";
  append_json_array(out, "checkpoints", s.checkpoints);
  out += ',';
  append_json_array(out, "mean_tv", s.mean_tv);
  out += ',';
  append_json_array(out, "median_tv", s.median_tv);
  out += ',';
  append_json_array(out, "q90_tv", s.q90_tv);
  out += '}';
  return out;
}

void write_trajectory_csv(std::ostream& os, const FilterPairTrajectory& tr) {
  const long d = tr.pi_mu.empty() ? 0 : tr.pi_mu.front().size();
  os << "t,x,dY";
  for (long i = 1; i <= d; ++i) os << ",pi_mu_" << i;
  for (long i = 1; i <= d; ++i) os << ",pi_nu_" << i;
  os << ",tv\r\n";
  for (size_t k = 0; k < tr.times.size(); ++k) {
    os << fmt_g17(tr.times[k]) << ',' << tr.signal_states[k] + 1 << ','
       << fmt_g17(tr.obs_increments[k]);
    for (long i = 0; i < d; ++i) os << ',' << fmt_g17(tr.pi_mu[k][i]);
    for (long i = 0; i < d; ++i) os << ',' << fmt_g17(tr.pi_nu[k][i]);
    os << ',' << fmt_g17(tr.tv[k]) << "\r\n";
  }
}

std::string sweep_to_json_string(const std::vector<KappaSweepRow>& rows) {
  std::string out = "[";
  for (size_t i = 0; i < rows.size(); ++i) {
    if (i) out += ',';
    out += "{\"kappa\":";
    out += fmt_g17(rows[i].kappa);
    out += ",\"mean_terminal_tv\":";
    out += fmt_g17(rows[i].mean_terminal_tv);
    out += '}';
  }
  out += ']';
  return out;
}

}  // namespace filtstab
