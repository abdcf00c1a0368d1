#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "filtstab/chain.hpp"
#include "filtstab/wonham.hpp"
#include "test_util.hpp"

using namespace filtstab;
using testutil::vec2;

namespace {

FiniteHmm frozen_model(const Eigen::MatrixXd& L, const Eigen::VectorXd& h,
                       double kappa = 1.0,
                       ObsKind kind = ObsKind::white_noise) {
  FiniteHmm m;
  m.d = static_cast<int>(L.rows());
  m.generator = L;
  m.h = h;
  m.kappa = kappa;
  m.obs_kind = kind;
  return m;
}

const Preset& preset(const char* name) {
  const Preset* p = find_preset(name);
  REQUIRE(p != nullptr);
  return *p;
}

bool all_crlf(const std::string& text) {
  for (size_t i = 0; i < text.size(); ++i)
    if (text[i] == '\n' && (i == 0 || text[i - 1] != '\r')) return false;
  return true;
}

}  // namespace

TEST_CASE("validate_config flags each bad field") {
  SimConfig good;
  CHECK(validate_config(good).empty());

  auto bad = [](auto mutate) {
    SimConfig c;
    mutate(c);
    const auto errs = validate_config(c);
    REQUIRE_FALSE(errs.empty());
    return errs.front().code;
  };
  CHECK(bad([](SimConfig& c) { c.t_max = 0.0; }) == "BadConfig");
  CHECK(bad([](SimConfig& c) { c.dt = -1.0; }) == "BadConfig");
  CHECK(bad([](SimConfig& c) { c.dt = 20.0; }) == "BadConfig");  // > t_max
  CHECK(bad([](SimConfig& c) { c.n_paths = 0; }) == "BadConfig");
  CHECK(bad([](SimConfig& c) { c.record_stride = 0; }) == "BadConfig");
  CHECK(bad([](SimConfig& c) { c.dt = 1e-8; c.t_max = 100.0; }) ==
        "BadConfig");  // over the step cap
}

TEST_CASE("default_dt scales with rates and noise level") {
  CHECK(default_dt(preset("E1").model) == doctest::Approx(1e-3));
  FiniteHmm quiet = preset("E1").model;
  quiet.kappa = 0.1;  // correction exponent grows, step shrinks
  CHECK(default_dt(quiet) == doctest::Approx(1e-5));
  quiet.kappa = 1e-6;
  CHECK(default_dt(quiet) == doctest::Approx(1e-6));  // floor
  FiniteHmm counting = preset("E1").model;
  counting.obs_kind = ObsKind::counting;
  CHECK(default_dt(counting) == doctest::Approx(1e-3));
}

TEST_CASE("a zero generator never jumps") {
  PathRng rng(1, 0);
  const auto m = frozen_model(Eigen::MatrixXd::Zero(2, 2), vec2(0, 1));
  const JumpPath p = simulate_signal(m, 1, 50.0, rng);
  CHECK(p.times == std::vector<double>{0.0});
  CHECK(p.states == std::vector<int>{1});
}

TEST_CASE("flip-chain holding times have unit mean") {
  const FiniteHmm& m = preset("E1").model;
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    PathRng rng(77, static_cast<std::uint64_t>(i));
    const JumpPath p = simulate_signal(m, 0, 50.0, rng);
    REQUIRE(p.times.size() >= 2);
    sum += p.times[1];
  }
  CHECK(std::abs(sum / n - 1.0) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("E5 absorbs into each target state half the time") {
  const FiniteHmm& m = preset("E5").model;
  int into_first = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    PathRng rng(31, static_cast<std::uint64_t>(i));
    const JumpPath p = simulate_signal(m, 2, 100.0, rng);
    const int final_state = p.states.back();
    REQUIRE(final_state != 2);  // rate 2 out of the transient state
    if (final_state == 0) ++into_first;
  }
  const double freq = static_cast<double>(into_first) / n;
  CHECK(std::abs(freq - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("integrate_h sums segment contributions exactly") {
  const auto m = frozen_model(Eigen::MatrixXd::Zero(2, 2), vec2(0, 1));
  JumpPath p;
  p.times = {0.0, 0.5};
  p.states = {0, 1};
  CHECK(integrate_h(m, p, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(integrate_h(m, p, 0.0, 0.5) == doctest::Approx(0.0));
  CHECK(integrate_h(m, p, 0.25, 0.75) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(integrate_h(m, p, 0.5, 2.5) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(integrate_h(m, p, 1.0, 1.0) == 0.0);  // empty interval
}

TEST_CASE("pure-noise observation increments have variance dt") {
  const auto m = frozen_model(Eigen::MatrixXd::Zero(2, 2), vec2(0, 0));
  PathRng rng(5, 0);
  const JumpPath p = simulate_signal(m, 0, 1000.0, rng);
  const int n = 100000;
  const double dt = 0.01;
  const auto dy = simulate_observations(m, p, n, dt, rng);
  double mean = 0.0;
  for (double v : dy) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : dy) var += (v - mean) * (v - mean);
  var /= n - 1;
  CHECK(std::abs(var / dt - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("kappa=0 observations are the pure drift") {
  // binary-exact dt and h so the segment arithmetic is exact
  const auto m = frozen_model(Eigen::MatrixXd::Zero(2, 2), vec2(0.5, 1), 0.0);
  PathRng rng(6, 0);
  const JumpPath p = simulate_signal(m, 0, 10.0, rng);
  const auto dy = simulate_observations(m, p, 16, 0.125, rng);
  for (double v : dy) CHECK(v == 0.5 * 0.125);
}

TEST_CASE("counting increments have the Poisson mean") {
  const auto m = frozen_model(Eigen::MatrixXd::Zero(1, 1),
                              Eigen::VectorXd::Constant(1, 2.0), 1.0,
                              ObsKind::counting);
  PathRng rng(8, 0);
  const JumpPath p = simulate_signal(m, 0, 1e5, rng);
  const int n = 100000;
  const auto dy = simulate_observations(m, p, n, 0.1, rng);
  double mean = 0.0;
  for (double v : dy) {
    CHECK(v >= 0.0);
    CHECK(v == std::floor(v));  // integer counts
    mean += v;
  }
  mean /= n;
  const double se = std::sqrt(0.2 / n);
  CHECK(std::abs(mean - 0.2) < 5.0 * se);
}

TEST_CASE("white-noise correction matches the hand-evaluated weights") {
  const auto m = frozen_model(Eigen::MatrixXd::Zero(2, 2), vec2(0, 1));
  const Eigen::VectorXd out = filter_correct(m, vec2(0.5, 0.5), 0.5, 0.1);
  // weights (1, e^{0.45}): exponent h*dY - h^2 dt / 2 = 0.5 - 0.05
  const double w1 = std::exp(0.45);
  CHECK(out[0] == doctest::Approx(1.0 / (1.0 + w1)).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(w1 / (1.0 + w1)).epsilon(1e-12));
  CHECK(out[0] == doctest::Approx(0.3894).epsilon(5e-4));
  CHECK(out.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("counting correction matches the likelihood ratio") {
  const auto m = frozen_model(Eigen::MatrixXd::Zero(2, 2), vec2(1, 2), 1.0,
                              ObsKind::counting);
  const Eigen::VectorXd out = filter_correct(m, vec2(0.5, 0.5), 3.0, 0.1);
  const double w0 = std::exp(-0.1);        // 1^3 e^{-0.1}
  const double w1 = 8.0 * std::exp(-0.2);  // 2^3 e^{-0.2}
  CHECK(out[0] == doctest::Approx(w0 / (w0 + w1)).epsilon(1e-12));
}

TEST_CASE("the exponent shift survives extreme observation values") {
  const auto m = frozen_model(Eigen::MatrixXd::Zero(2, 2), vec2(0, 1000));
  const Eigen::VectorXd out = filter_correct(m, vec2(0.5, 0.5), 50.0, 0.01);
  CHECK(out.allFinite());
  CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(out.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("white-noise correction refuses kappa=0") {
  const auto m = frozen_model(Eigen::MatrixXd::Zero(2, 2), vec2(0, 1), 0.0);
  CHECK_THROWS_AS(filter_correct(m, vec2(0.5, 0.5), 0.1, 0.1),
                  std::invalid_argument);
}

TEST_CASE("structurally impossible counting observations throw") {
  const auto m = frozen_model(Eigen::MatrixXd::Zero(2, 2), vec2(0, 2), 1.0,
                              ObsKind::counting);
  // prior sits entirely on the zero-intensity state but a count arrived
  CHECK_THROWS_AS(filter_correct(m, vec2(1.0, 0.0), 1.0, 0.1),
                  DegenerateWeight);
}

TEST_CASE("constant h reduces the filter to the forward flow") {
  FiniteHmm m = preset("E1").model;
  m.h = vec2(0, 0);
  const Eigen::VectorXd pi = vec2(0.9, 0.1);
  const Eigen::VectorXd stepped = filter_step(m, pi, 0.37, 1e-3);
  const Eigen::VectorXd flowed = forward_flow(m, pi, 1e-3);
  CHECK((stepped - flowed).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero generator and constant h fix the filter exactly") {
  const auto m = frozen_model(Eigen::MatrixXd::Zero(2, 2), vec2(3, 3));
  const Eigen::VectorXd pi = vec2(0.25, 0.75);  // binary-exact entries
  const Eigen::VectorXd out = filter_step(m, pi, 0.8, 0.125);
  CHECK(out[0] == pi[0]);
  CHECK(out[1] == pi[1]);
}

TEST_CASE("FilterStepper agrees with the one-shot step") {
  const FiniteHmm& m = preset("E1").model;
  const FilterStepper stepper(m, 1e-3);
  Eigen::VectorXd pi = vec2(0.3, 0.7);
  for (double dy : {0.01, -0.02, 0.004}) {
    const Eigen::VectorXd a = stepper.step(pi, dy);
    const Eigen::VectorXd b = filter_step(m, pi, dy, 1e-3);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-15);
    pi = a;
    CHECK(pi.minCoeff() >= 0.0);
    CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("checkpoint grid ends on the final step") {
  const auto cps = checkpoint_steps(10.0, 1e-3);
  REQUIRE_FALSE(cps.empty());
  CHECK(cps.size() <= 16);
  CHECK(cps.front() >= 1);
  CHECK(cps.back() == 10000);
  for (size_t i = 1; i < cps.size(); ++i) CHECK(cps[i] > cps[i - 1]);

  const auto coarse = checkpoint_steps(1.0, 0.5);
  CHECK(coarse.back() == 2);
  for (long k : coarse) CHECK((k == 1 || k == 2));
}

TEST_CASE("equal priors stay glued together") {
  SimConfig cfg;
  cfg.t_max = 1.0;
  cfg.n_paths = 5;
  cfg.seed = 3;
  const InitialPair same{vec2(1, 0), vec2(1, 0)};
  const auto res = run_pair(preset("E1").model, same, cfg, 2);
  for (double tv : res.summary.mean_tv) CHECK(tv == 0.0);
  for (double tv : res.summary.terminal_tv) CHECK(tv == 0.0);
  REQUIRE(res.recorded.size() == 2);
  for (const auto& tr : res.recorded)
    for (double tv : tr.tv) CHECK(tv == 0.0);
}

TEST_CASE("uninformative static model keeps the initial gap") {
  SimConfig cfg;
  cfg.t_max = 1.0;
  cfg.n_paths = 4;
  cfg.seed = 19;
  const InitialPair pair{vec2(0.9, 0.1), vec2(0.5, 0.5)};
  const auto res = run_pair(preset("E4").model, pair, cfg, 1);
  for (double tv : res.summary.mean_tv)
    CHECK(tv == doctest::Approx(0.4).epsilon(1e-12));
  REQUIRE(res.recorded.size() == 1);
  for (double tv : res.recorded[0].tv)
    CHECK(tv == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("recorded trajectories carry consistent rows") {
  SimConfig cfg;
  cfg.t_max = 0.5;
  cfg.n_paths = 3;
  cfg.seed = 9;
  cfg.record_stride = 50;
  const auto res =
      run_pair(preset("E1").model, preset("E1").init, cfg, 5);
  CHECK(res.recorded.size() == 3);  // capped at n_paths
  for (const auto& tr : res.recorded) {
    REQUIRE_FALSE(tr.times.empty());
    CHECK(tr.times.front() == 0.0);
    CHECK(tr.times.back() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tr.obs_increments.front() == 0.0);
    const size_t rows = tr.times.size();
    REQUIRE(tr.signal_states.size() == rows);
    REQUIRE(tr.pi_mu.size() == rows);
    REQUIRE(tr.pi_nu.size() == rows);
    REQUIRE(tr.tv.size() == rows);
    for (size_t k = 0; k < rows; ++k) {
      CHECK(tr.signal_states[k] >= 0);
      CHECK(tr.signal_states[k] < 2);
      CHECK(tr.pi_mu[k].sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(tr.pi_mu[k].minCoeff() >= 0.0);
      const double want = 0.5 * (tr.pi_mu[k] - tr.pi_nu[k]).lpNorm<1>();
      CHECK(tr.tv[k] == doctest::Approx(want).epsilon(1e-15));
    }
  }
}

TEST_CASE("parallel, serial, and threaded runs emit identical bytes") {
  SimConfig cfg;
  cfg.t_max = 2.0;
  cfg.n_paths = 20;
  cfg.seed = 123;
  cfg.record_stride = 100;
  const FiniteHmm& m = preset("E2").model;
  const InitialPair pair{vec2(0.9, 0.1), vec2(0.5, 0.5)};

  const auto serial = run_pair_serial(m, pair, cfg, 2);
  const auto threaded = run_pair(m, pair, cfg, 2, 4);
  CHECK(summary_to_json_string(serial.summary) ==
        summary_to_json_string(threaded.summary));
  REQUIRE(serial.recorded.size() == threaded.recorded.size());
  for (size_t i = 0; i < serial.recorded.size(); ++i) {
    std::ostringstream a, b;
    write_trajectory_csv(a, serial.recorded[i]);
    write_trajectory_csv(b, threaded.recorded[i]);
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("run_pair rejects a broken config") {
  SimConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(run_pair(preset("E1").model, preset("E1").init, cfg),
                  std::invalid_argument);
}

TEST_CASE("counting models run end to end") {
  FiniteHmm m = preset("E1").model;
  m.obs_kind = ObsKind::counting;
  m.h = vec2(1, 3);
  SimConfig cfg;
  cfg.t_max = 1.0;
  cfg.n_paths = 5;
  cfg.seed = 4;
  const auto res = run_pair(m, preset("E1").init, cfg, 1);
  for (double tv : res.summary.mean_tv) {
    CHECK(tv >= 0.0);
    CHECK(tv <= 1.0);
  }
}

TEST_CASE("a single-entry sweep reproduces run_pair bitwise") {
  SimConfig cfg;
  cfg.t_max = 1.0;
  cfg.n_paths = 10;
  cfg.seed = 21;
  const FiniteHmm& m = preset("E1").model;
  const auto rows = kappa_sweep(m, preset("E1").init, {1.0}, cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].kappa == 1.0);
  const auto direct = run_pair(m, preset("E1").init, cfg);
  double sum = 0.0;
  for (double tv : direct.summary.terminal_tv) sum += tv;
  CHECK(rows[0].mean_terminal_tv ==
        sum / static_cast<double>(direct.summary.terminal_tv.size()));
}

TEST_CASE("kappa_sweep rejects invalid requests") {
  SimConfig cfg;
  cfg.t_max = 1.0;
  FiniteHmm counting = preset("E1").model;
  counting.obs_kind = ObsKind::counting;
  CHECK_THROWS_AS(kappa_sweep(counting, preset("E1").init, {1.0}, cfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      kappa_sweep(preset("E1").model, preset("E1").init, {0.0}, cfg),
      std::invalid_argument);
}

TEST_CASE("observable model forgets the prior at every noise level") {
  SimConfig cfg;
  cfg.t_max = 10.0;
  cfg.n_paths = 50;
  cfg.seed = 14;
  const auto rows = kappa_sweep(preset("E1").model, preset("E1").init,
                                {0.5, 1.0, 2.0}, cfg, 4);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CAPTURE(row.kappa);
    CHECK(row.mean_terminal_tv < 0.05);
  }
}

TEST_CASE("summary JSON has exactly the four pinned arrays") {
  SimConfig cfg;
  cfg.t_max = 1.0;
  cfg.n_paths = 3;
  cfg.seed = 2;
  const auto res = run_pair(preset("E1").model, preset("E1").init, cfg);
  const std::string text = summary_to_json_string(res.summary);
  CHECK(text == summary_to_json_string(res.summary));  // stable bytes
  const auto j = nlohmann::json::parse(text);
  REQUIRE(j.is_object());
  CHECK(j.size() == 4);
  for (const char* key : {"checkpoints", "mean_tv", "median_tv", "q90_tv"}) {
    CAPTURE(key);
    REQUIRE(j.contains(key));
    CHECK(j[key].size() == res.summary.checkpoints.size());
  }
  for (size_t i = 0; i < res.summary.checkpoints.size(); ++i)
    CHECK(j["mean_tv"][i].get<double>() == res.summary.mean_tv[i]);
}

TEST_CASE("sweep JSON round trips through a parser") {
  const std::vector<KappaSweepRow> rows = {{0.5, 0.25}, {2.0, 0.125}};
  const std::string text = sweep_to_json_string(rows);
  const auto j = nlohmann::json::parse(text);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 2);
  CHECK(j[0]["kappa"].get<double>() == 0.5);
  CHECK(j[0]["mean_terminal_tv"].get<double>() == 0.25);
  CHECK(j[1]["kappa"].get<double>() == 2.0);
}

TEST_CASE("trajectory CSV uses CRLF rows and one-based states") {
  SimConfig cfg;
  cfg.t_max = 0.01;
  cfg.dt = 1e-3;
  cfg.n_paths = 1;
  cfg.seed = 5;
  const InitialPair pair{vec2(1, 0), vec2(0.5, 0.5)};
  const auto res = run_pair(preset("E4").model, pair, cfg, 1);
  REQUIRE(res.recorded.size() == 1);
  std::ostringstream os;
  write_trajectory_csv(os, res.recorded[0]);
  const std::string text = os.str();
  CHECK(all_crlf(text));
  const std::string header = text.substr(0, text.find("\r\n"));
  CHECK(header == "t,x,dY,pi_mu_1,pi_mu_2,pi_nu_1,pi_nu_2,tv");
  // E4 never jumps, the signal stays in state 1 (one-based)
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    CHECK(line.substr(c1 + 1, c2 - c1 - 1) == "1");
    ++rows;
  }
  CHECK(rows == static_cast<int>(res.recorded[0].times.size()));
}
