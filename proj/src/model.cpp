#include "filtstab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "io_util.hpp"

namespace filtstab {

std::string to_string(ObsKind kind) {
  return kind == ObsKind::white_noise ? "white_noise" : "counting";
}

std::optional<ObsKind> obs_kind_from_string(const std::string& s) {
  if (s == "white_noise") return ObsKind::white_noise;
  if (s == "counting") return ObsKind::counting;
  return std::nullopt;
}

namespace {

std::string at(int i, int j) {
  std::ostringstream os;
  os << "(" << i << "," << j << ")";
  return os.str();
}

bool finite(const Eigen::MatrixXd& M) { return M.allFinite(); }

}  // namespace

std::vector<ModelError> validate_model(const FiniteHmm& m) {
  std::vector<ModelError> errs;
  if (m.d < 1) {
    errs.push_back({"DimensionMismatch", "d must be >= 1"});
    return errs;
  }
  if (m.generator.rows() != m.d || m.generator.cols() != m.d)
    errs.push_back({"DimensionMismatch", "generator is not d x d"});
  if (m.h.size() != m.d)
    errs.push_back({"DimensionMismatch", "h does not have length d"});
  if (!m.labels.empty() && static_cast<int>(m.labels.size()) != m.d)
    errs.push_back({"DimensionMismatch", "labels do not have length d"});
  if (!errs.empty()) return errs;

  if (!finite(m.generator) || !m.h.allFinite() || !std::isfinite(m.kappa)) {
    errs.push_back({"NonFinite", "non-finite entries"});
    return errs;
  }
  for (int i = 0; i < m.d; ++i) {
    for (int j = 0; j < m.d; ++j) {
      if (i != j && m.generator(i, j) < 0.0)
        errs.push_back({"NegativeRate", "generator" + at(i, j)});
    }
    const double row_sum = m.generator.row(i).sum();
    if (std::abs(row_sum) > kRowSumTol) {
      std::ostringstream os;
      os << "row " << i << " sums to " << row_sum;
      errs.push_back({"RowSumNonzero", os.str()});
    }
  }
  if (m.kappa < 0.0)
    errs.push_back({"NegativeRate", "kappa must be >= 0"});
  if (m.obs_kind == ObsKind::counting) {
    for (int i = 0; i < m.d; ++i)
      if (m.h[i] < 0.0)
        errs.push_back({"NegativeIntensity", "h[" + std::to_string(i) + "]"});
  }
  return errs;
}

std::vector<ModelError> validate_pair(const InitialPair& p, int d) {
  std::vector<ModelError> errs;
  auto check = [&](const Eigen::VectorXd& v, const char* name) {
    if (v.size() != d) {
      errs.push_back({"DimensionMismatch", std::string(name) + " length"});
      return;
    }
    for (int i = 0; i < d; ++i)
      if (!(v[i] >= 0.0))
        errs.push_back({"NegativeEntry", std::string(name) + "[" +
                                             std::to_string(i) + "] < 0"});
    if (std::abs(v.sum() - 1.0) > kProbSumTol)
      errs.push_back({"SumNotOne", std::string(name) + " does not sum to 1"});
  };
  check(p.mu, "mu");
  check(p.nu, "nu");
  return errs;
}

bool absolutely_continuous(const InitialPair& p) {
  for (int i = 0; i < p.mu.size(); ++i)
    if (p.nu[i] == 0.0 && p.mu[i] != 0.0) return false;
  return true;
}

LevelSetStructure level_sets(const FiniteHmm& m) {
  const int d = m.d;
  const double scale = std::max(1.0, m.h.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;

  std::vector<int> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return m.h[a] < m.h[b]; });

  LevelSetStructure ls;
  for (int pos = 0; pos < d; ++pos) {
    const int i = order[static_cast<size_t>(pos)];
    const bool new_group =
        pos == 0 || m.h[i] - m.h[order[static_cast<size_t>(pos - 1)]] > tol;
    if (new_group) {
      ls.values.push_back(m.h[i]);
      ls.masks.emplace_back(Eigen::VectorXd::Zero(d));
    }
    ls.masks.back()[i] = 1.0;
  }
  return ls;
}

namespace {

FiniteHmm make_model(int d, Eigen::MatrixXd gen, Eigen::VectorXd h,
                     double kappa) {
  FiniteHmm m;
  m.d = d;
  m.generator = std::move(gen);
  m.h = std::move(h);
  m.kappa = kappa;
  return m;
}

std::vector<Preset> make_presets() {
  std::vector<Preset> ps;
  auto vec = [](std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<long>(v.size()));
    int i = 0;
    for (double e : v) x[i++] = e;
    return x;
  };

  Eigen::MatrixXd flip(2, 2);
  flip << -1, 1, 1, -1;

  ps.push_back({"E1", "symmetric flip-flop, distinct h: observable",
                make_model(2, flip, vec({0, 1}), 1.0),
                {vec({0.9, 0.1}), vec({0.5, 0.5})}});
  ps.push_back({"E2", "symmetric flip-flop, constant h: detectable only",
                make_model(2, flip, vec({0, 0}), 1.0),
                {vec({0.9, 0.1}), vec({0.5, 0.5})}});
  ps.push_back({"E3", "frozen chain, distinct h: observable, two classes",
                make_model(2, Eigen::MatrixXd::Zero(2, 2), vec({0, 1}), 1.0),
                {vec({0.9, 0.1}), vec({0.5, 0.5})}});
  ps.push_back({"E4", "frozen chain, constant h: not detectable",
                make_model(2, Eigen::MatrixXd::Zero(2, 2), vec({0, 0}), 1.0),
                {vec({0.9, 0.1}), vec({0.5, 0.5})}});

  Eigen::MatrixXd leak = Eigen::MatrixXd::Zero(3, 3);
  leak.row(2) << 1, 1, -2;
  ps.push_back({"E5", "two absorbing states fed by a transient one",
                make_model(3, leak, vec({0, 1, 0}), 1.0),
                {vec({0.6, 0.2, 0.2}), vec({1.0 / 3, 1.0 / 3, 1.0 / 3})}});

  Eigen::MatrixXd cyc = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    cyc(i, i) = -1;
    cyc(i, (i + 1) % 4) = 1;
  }
  ps.push_back({"E6", "cyclic chain with two-valued h: stability degrades as kappa drops",
                make_model(4, cyc, vec({1, 0, 1, 0}), 1.0),
                {vec({0.7, 0.1, 0.1, 0.1}), vec({0.25, 0.25, 0.25, 0.25})}});
  return ps;
}

}  // namespace

const std::vector<Preset>& builtin_presets() {
  static const std::vector<Preset> presets = make_presets();
  return presets;
}

const Preset* find_preset(const std::string& name) {
  for (const Preset& p : builtin_presets())
    if (p.name == name) return &p;
  return nullptr;
}

std::optional<FiniteHmm> model_from_json(const nlohmann::json& j,
                                         std::vector<ModelError>& errs) {
  if (!detail::check_fields(j, {"d", "generator", "h", "kappa", "obs_kind"},
                            errs, {"labels"}))
    return std::nullopt;

  FiniteHmm m;
  if (!j["d"].is_number_integer()) {
    errs.push_back({"DimensionMismatch", "d must be an integer"});
    return std::nullopt;
  }
  m.d = j["d"].get<int>();
  if (!detail::read_matrix(j["generator"], m.generator, errs, "generator"))
    return std::nullopt;
  if (!detail::read_vector(j["h"], m.h, errs, "h")) return std::nullopt;
  if (!j["kappa"].is_number()) {
    errs.push_back({"DimensionMismatch", "kappa must be a number"});
    return std::nullopt;
  }
  m.kappa = j["kappa"].get<double>();
  if (!j["obs_kind"].is_string()) {
    errs.push_back({"DimensionMismatch", "obs_kind must be a string"});
    return std::nullopt;
  }
  const auto kind = obs_kind_from_string(j["obs_kind"].get<std::string>());
  if (!kind) {
    errs.push_back({"DimensionMismatch",
                    "obs_kind must be \"white_noise\" or \"counting\""});
    return std::nullopt;
  }
  m.obs_kind = *kind;
  if (j.contains("labels")) {
    if (!j["labels"].is_array()) {
      errs.push_back({"DimensionMismatch", "labels must be an array"});
      return std::nullopt;
    }
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) {
        errs.push_back({"DimensionMismatch", "labels must be strings"});
        return std::nullopt;
      }
      m.labels.push_back(l.get<std::string>());
    }
  }
  auto model_errs = validate_model(m);
  if (!model_errs.empty()) {
    errs.insert(errs.end(), model_errs.begin(), model_errs.end());
    return std::nullopt;
  }
  return m;
}

nlohmann::json model_to_json(const FiniteHmm& m) {
  nlohmann::json j;
  j["d"] = m.d;
  j["generator"] = detail::matrix_to_json(m.generator);
  j["h"] = detail::vector_to_json(m.h);
  j["kappa"] = m.kappa;
  j["obs_kind"] = to_string(m.obs_kind);
  if (!m.labels.empty()) j["labels"] = m.labels;
  return j;
}

}  // namespace filtstab
