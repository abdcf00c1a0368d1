// command-line front end: analyze / simulate / kalman

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "filtstab/chain.hpp"
#include "filtstab/errors.hpp"
#include "filtstab/kalman.hpp"
#include "filtstab/model.hpp"
#include "filtstab/observability.hpp"
#include "filtstab/verdict.hpp"
#include "filtstab/wonham.hpp"

namespace {

using namespace filtstab;

struct Outcome {
  int code = 1;
  std::string path;  // empty means "-"
};

void print_errors(const std::vector<ModelError>& errs) {
  for (const auto& e : errs)
    std::fprintf(stderr, "error: %s: %s\n", e.code.c_str(), e.detail.c_str());
}

constexpr const char* kPresetPrefix = "presets:";

struct LoadedModel {
  FiniteHmm model;
  std::optional<InitialPair> init;  // presets carry a default pair
};

std::optional<nlohmann::json> load_json_file(const std::string& path,
                                             std::vector<ModelError>& errs) {
  std::ifstream in(path);
  if (!in) {
    errs.push_back({"FileNotFound", path + ": file not found"});
    return std::nullopt;
  }
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_ex=*/false);
  if (j.is_discarded()) {
    errs.push_back({"BadJson", path + ": not valid JSON"});
    return std::nullopt;
  }
  return j;
}

std::optional<LoadedModel> load_model(const std::string& spec,
                                      std::vector<ModelError>& errs) {
  if (spec.rfind(kPresetPrefix, 0) == 0) {
    const std::string name = spec.substr(std::string(kPresetPrefix).size());
    const Preset* p = find_preset(name);
    if (!p) {
      errs.push_back({"UnknownPreset", name});
      return std::nullopt;
    }
    return LoadedModel{p->model, p->init};
  }
  const auto j = load_json_file(spec, errs);
  if (!j) return std::nullopt;
  auto m = model_from_json(*j, errs);
  if (!m) return std::nullopt;
  return LoadedModel{std::move(*m), std::nullopt};
}

std::optional<LinearModel> load_linear_model(const std::string& spec,
                                             std::vector<ModelError>& errs) {
  if (spec.rfind(kPresetPrefix, 0) == 0) {
    const std::string name = spec.substr(std::string(kPresetPrefix).size());
    const LinearPreset* p = find_linear_preset(name);
    if (!p) {
      errs.push_back({"UnknownPreset", name});
      return std::nullopt;
    }
    return p->model;
  }
  const auto j = load_json_file(spec, errs);
  if (!j) return std::nullopt;
  return linear_model_from_json(*j, errs);
}

std::optional<Eigen::VectorXd> parse_prob_vector(const std::string& s) {
  std::vector<double> vals;
  size_t pos = 0;
  while (pos <= s.size()) {
    const size_t comma = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, comma - pos);
    try {
      size_t used = 0;
      vals.push_back(std::stod(tok, &used));
      if (used != tok.size()) return std::nullopt;
    } catch (...) {
      return std::nullopt;
    }
    pos = comma + 1;
  }
  Eigen::VectorXd v(static_cast<long>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v[static_cast<long>(i)] = vals[i];
  return v;
}

bool write_file(const std::string& path, const std::string& content,
                std::vector<ModelError>& errs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    errs.push_back({"WriteFailed", path});
    return false;
  }
  out << content;
  return out.good();
}

const char* verdict_word(Verdict v) {
  switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::no: return "no";
    default: return "n/a";
  }
}

Outcome cmd_analyze(const std::string& model_spec, const std::string& out_path,
                    int oracle_depth, const std::vector<double>& deltas,
                    bool rank_test) {
  std::vector<ModelError> errs;
  const auto loaded = load_model(model_spec, errs);
  if (!loaded) {
    print_errors(errs);
    return {1, ""};
  }
  const FiniteHmm& m = loaded->model;

  ObservableSpaceOptions opts;
  opts.use_rank_test = rank_test;
  const ObservabilityResult obs = observable_space(m, opts);
  const ChainDecomposition dec = decompose(m);
  const StabilityReport rep = assess(m, obs, dec);

  std::printf("model            %s (d=%d, %s)\n", model_spec.c_str(), m.d,
              to_string(m.obs_kind).c_str());
  std::printf("observable       %s (dim O = %d, dim N = %d)\n",
              rep.observable ? "yes" : "no", obs.O.dim(), rep.dim_N);
  if (rep.max_real_part)
    std::printf("detectable       %s (max Re on N = %.6g, rank %d/%d)\n",
                rep.detectable ? "yes" : "no", *rep.max_real_part,
                *rep.restriction_rank, rep.dim_N);
  else
    std::printf("detectable       %s (N trivial)\n",
                rep.detectable ? "yes" : "no");
  std::printf("stable           %s (%s)\n", verdict_word(rep.stable),
              rep.stable_note.c_str());
  std::printf("strong stable    %s (%s)\n", verdict_word(rep.strong_stable),
              rep.strong_stable_note.c_str());
  std::printf("ergodic classes  %d, transient states %d\n",
              rep.num_ergodic_classes,
              static_cast<int>(dec.transient.size()));

  nlohmann::json j = report_to_json(rep);
  if (oracle_depth >= 0) {
    const Subspace bf = brute_force_observable(m, oracle_depth, deltas);
    double max_resid = 0.0;
    for (int c = 0; c < bf.dim(); ++c)
      max_resid = std::max(max_resid, obs.O.residual(bf.basis().col(c)));
    const bool contained = max_resid < 1e-8;
    std::printf("oracle           depth %d: dim %d vs dim O %d, residual %.3g, %s\n",
                oracle_depth, bf.dim(), obs.O.dim(), max_resid,
                contained ? "contained" : "NOT CONTAINED");
    j["oracle"] = {{"depth", oracle_depth},
                   {"dim", bf.dim()},
                   {"dim_O", obs.O.dim()},
                   {"max_residual", max_resid},
                   {"contained", contained}};
  }
  if (!write_file(out_path, j.dump(2) + "\n", errs)) {
    print_errors(errs);
    return {2, ""};
  }
  return {0, out_path};
}

Outcome cmd_simulate(const std::string& model_spec, const std::string& mu_str,
                     const std::string& nu_str, double t_max, double dt_flag,
                     int n_paths, std::uint64_t seed, int threads,
                     int record_paths, int record_stride,
                     const std::string& out_dir,
                     const std::vector<double>& kappa_list) {
  std::vector<ModelError> errs;
  const auto loaded = load_model(model_spec, errs);
  if (!loaded) {
    print_errors(errs);
    return {1, ""};
  }
  const FiniteHmm& m = loaded->model;

  InitialPair pair;
  if (loaded->init) pair = *loaded->init;
  auto apply_prior = [&](const std::string& str, Eigen::VectorXd& vec,
                         const char* name) {
    if (!str.empty()) {
      const auto parsed = parse_prob_vector(str);
      if (parsed)
        vec = *parsed;
      else
        errs.push_back({"BadVector", std::string(name) + " does not parse"});
    } else if (vec.size() == 0) {
      errs.push_back(
          {"MissingField", std::string(name) + " is required for file models"});
    }
  };
  apply_prior(mu_str, pair.mu, "--mu");
  apply_prior(nu_str, pair.nu, "--nu");
  if (errs.empty()) {
    const auto pair_errs = validate_pair(pair, m.d);
    errs.insert(errs.end(), pair_errs.begin(), pair_errs.end());
  }
  if (m.obs_kind == ObsKind::white_noise && !(m.kappa > 0.0) &&
      kappa_list.empty())
    errs.push_back(
        {"BadConfig", "white-noise model needs kappa > 0 (or --kappa-sweep)"});
  for (double k : kappa_list)
    if (!(k > 0.0))
      errs.push_back({"BadConfig", "--kappa-sweep values must be > 0"});

  SimConfig cfg;
  cfg.t_max = t_max;
  cfg.dt = dt_flag > 0.0 ? dt_flag : default_dt(m);
  cfg.n_paths = n_paths;
  cfg.seed = seed;
  cfg.record_stride = record_stride;
  {
    const auto cfg_errs = validate_config(cfg);
    errs.insert(errs.end(), cfg_errs.begin(), cfg_errs.end());
  }
  if (!errs.empty()) {
    print_errors(errs);
    return {1, ""};
  }

  std::filesystem::create_directories(out_dir);

  if (!kappa_list.empty()) {
    const auto rows = kappa_sweep(m, pair, kappa_list, cfg, threads);
    std::printf("%12s %18s\n", "kappa", "mean terminal tv");
    for (const auto& r : rows)
      std::printf("%12.6g %18.6g\n", r.kappa, r.mean_terminal_tv);
    const std::string path = out_dir + "/sweep.json";
    if (!write_file(path, sweep_to_json_string(rows) + "\n", errs)) {
      print_errors(errs);
      return {2, ""};
    }
    return {0, path};
  }

  const RunPairResult res = run_pair(m, pair, cfg, record_paths, threads);
  const PairSummary& s = res.summary;
  std::printf("%12s %12s %12s %12s\n", "t", "mean tv", "median tv", "q90 tv");
  for (size_t c = 0; c < s.checkpoints.size(); ++c)
    std::printf("%12.6g %12.6g %12.6g %12.6g\n", s.checkpoints[c],
                s.mean_tv[c], s.median_tv[c], s.q90_tv[c]);

  const std::string path = out_dir + "/summary.json";
  if (!write_file(path, summary_to_json_string(s) + "\n", errs)) {
    print_errors(errs);
    return {2, ""};
  }
  for (size_t i = 0; i < res.recorded.size(); ++i) {
    const std::string csv_path =
        out_dir + "/path_" + std::to_string(i) + ".csv";
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) {
      std::fprintf(stderr, "error: WriteFailed: %s\n", csv_path.c_str());
      return {2, ""};
    }
    write_trajectory_csv(csv, res.recorded[i]);
  }
  return {0, path};
}

Outcome cmd_kalman(const std::string& model_spec, double t_max, double dt,
                   int n_paths, std::uint64_t seed, int threads,
                   int record_stride, const std::string& out_dir) {
  std::vector<ModelError> errs;
  const auto lm = load_linear_model(model_spec, errs);
  if (!lm) {
    print_errors(errs);
    return {1, ""};
  }
  const HautusResult haut = hautus_detectable(lm->A, lm->C);
  if (!haut.detectable) {
    std::printf("not detectable: witness eigenvalue %.6g%+.6gi\n",
                haut.witness.real(), haut.witness.imag());
    return {1, ""};
  }

  const KalmanPairSummary s = kalman_pair_experiment(
      *lm, t_max, dt, n_paths, seed, record_stride, threads);
  std::printf("%12s %14s %14s\n", "t", "riccati gap", "mean |xh-xh'|");
  for (size_t k = 0; k < s.times.size(); ++k)
    std::printf("%12.6g %14.6g %14.6g\n", s.times[k], s.gap[k],
                s.mean_xdiff[k]);
  std::printf("tail decreasing  %s\n", s.tail_decreasing ? "yes" : "no");

  std::filesystem::create_directories(out_dir);
  const std::string csv_path = out_dir + "/kalman_trace.csv";
  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) {
      std::fprintf(stderr, "error: WriteFailed: %s\n", csv_path.c_str());
      return {2, ""};
    }
    write_kalman_trace_csv(csv, s);
  }
  const std::string path = out_dir + "/kalman_summary.json";
  if (!write_file(path, kalman_summary_to_json_string(s) + "\n", errs)) {
    print_errors(errs);
    return {2, ""};
  }
  return {0, path};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-state filter stability workbench"};
  app.require_subcommand(1);

  std::string model_spec;
  std::string out_path = "report.json";
  std::string out_dir = "out";
  std::string mu_str, nu_str;
  double t_max = 10.0, dt = 0.0;
  int n_paths = 100, threads = 1, record_paths = 5, record_stride = 10;
  int oracle_depth = -1;
  bool rank_test = false;
  std::uint64_t seed = 0;
  std::vector<double> deltas{0.3, 0.7, 1.1};
  std::vector<double> kappa_list;

  auto* analyze = app.add_subcommand(
      "analyze", "observability / detectability / stability verdicts");
  analyze->add_option("model", model_spec, "model file or presets:<name>")
      ->required();
  analyze->add_option("--out", out_path, "report JSON path");
  analyze->add_option("--oracle-depth", oracle_depth,
                      "cross-check the observable space by word enumeration");
  analyze->add_option("--deltas", deltas, "time grid for the oracle words")
      ->delimiter(',');
  analyze->add_flag("--rank-test", rank_test,
                    "also allow the Krylov rank shortcut");

  auto* simulate = app.add_subcommand(
      "simulate", "Monte-Carlo filter pairs from two priors");
  simulate->add_option("model", model_spec, "model file or presets:<name>")
      ->required();
  simulate->add_option("--mu", mu_str, "first prior, comma-separated");
  simulate->add_option("--nu", nu_str, "second prior, comma-separated");
  simulate->add_option("--t-max", t_max, "horizon");
  simulate->add_option("--dt", dt, "grid step (default: model-adapted)");
  simulate->add_option("--paths", n_paths, "Monte-Carlo paths");
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--threads", threads, "worker threads");
  simulate->add_option("--record-paths", record_paths,
                       "number of paths written as CSV");
  simulate->add_option("--record-stride", record_stride,
                       "grid steps per recorded CSV row");
  simulate->add_option("--out-dir", out_dir, "output directory");
  simulate
      ->add_option("--kappa-sweep", kappa_list,
                   "rerun per noise level, common seed")
      ->delimiter(',');

  double k_t_max = 20.0, k_dt = 1e-3;
  int k_paths = 200, k_stride = 100;
  auto* kalman = app.add_subcommand(
      "kalman", "linear-Gaussian pair experiment (Riccati + filters)");
  kalman->add_option("model", model_spec, "linear model file or presets:<name>")
      ->required();
  kalman->add_option("--t-max", k_t_max, "horizon");
  kalman->add_option("--dt", k_dt, "grid step");
  kalman->add_option("--paths", k_paths, "Monte-Carlo paths");
  kalman->add_option("--seed", seed, "RNG seed");
  kalman->add_option("--threads", threads, "worker threads");
  kalman->add_option("--record-stride", k_stride,
                     "grid steps per recorded point");
  kalman->add_option("--out-dir", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    const int code = rc == 0 ? 0 : 1;
    std::printf("RESULT %d -\n", code);
    return code;
  }

  Outcome out;
  try {
    if (analyze->parsed())
      out = cmd_analyze(model_spec, out_path, oracle_depth, deltas, rank_test);
    else if (simulate->parsed())
      out = cmd_simulate(model_spec, mu_str, nu_str, t_max, dt, n_paths, seed,
                         threads, record_paths, record_stride, out_dir,
                         kappa_list);
    else
      out = cmd_kalman(model_spec, k_t_max, k_dt, k_paths, seed, threads,
                       k_stride, out_dir);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    out = {1, ""};
  } catch (const filtstab::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    out = {2, ""};
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    out = {2, ""};
  }
  std::printf("RESULT %d %s\n", out.code, out.path.empty() ? "-" : out.path.c_str());
  return out.code;
}
