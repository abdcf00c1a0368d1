#include "filtstab/verdict.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "filtstab/numlin.hpp"

namespace filtstab {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::no: return "no";
    default: return "not_applicable";
  }
}

Eigen::MatrixXd restrict_generator_to_N(const FiniteHmm& m, const Subspace& N) {
  if (N.dim() < 1)
    throw std::invalid_argument("restrict_generator_to_N: N is trivial");
  const Eigen::MatrixXd& B = N.basis();
  const Eigen::MatrixXd LT = m.generator.transpose();
  const Eigen::MatrixXd R = B.transpose() * LT * B;
  const double resid = (LT * B - B * R).norm();
  if (!(resid < 1e-8)) {
    std::ostringstream os;
    os << "restrict_generator_to_N: N is not invariant under the adjoint "
          "generator (residual "
       << resid << ")";
    throw InvarianceViolation(os.str());
  }
  return R;
}

StabilityReport assess(const FiniteHmm& m, const ObservabilityResult& obs,
                       const ChainDecomposition& dec) {
  StabilityReport r;
  r.observable = obs.is_observable;
  r.dim_N = obs.N.dim();
  r.num_ergodic_classes = static_cast<int>(dec.ergodic_classes.size());
  r.has_transient = !dec.transient.empty();
  r.kappa_positive = m.kappa > 0.0;

  if (r.dim_N > 0) {
    Eigen::MatrixXd R = restrict_generator_to_N(m, obs.N);
    // A restriction whose entries all sit at roundoff level relative to the
    // generator is the zero map; judging its rank against its own largest
    // singular value would call noise full-rank.
    const double gen_scale =
        std::max(1.0, m.generator.cwiseAbs().maxCoeff());
    if (R.cwiseAbs().maxCoeff() <= kEdgeThreshold * gen_scale) R.setZero();
    const HurwitzResult hw = is_hurwitz(R);
    const int rank = numerical_rank(R);
    r.max_real_part = hw.max_real_part;
    r.restriction_rank = rank;
    // the nonzero spectrum of the adjoint generator sits strictly in the
    // left half plane, so Hurwitz and full rank must coincide here
    if (hw.hurwitz != (rank == r.dim_N)) {
      std::ostringstream os;
      os << "assess: Hurwitz test (max Re " << hw.max_real_part
         << ") and rank test (" << rank << "/" << r.dim_N << ") disagree";
      throw NumericalError(os.str());
    }
    r.detectable = r.observable || hw.hurwitz;
  } else {
    r.detectable = r.observable;
  }

  const bool theorem_applies =
      r.kappa_positive && m.obs_kind == ObsKind::white_noise;
  if (theorem_applies) {
    r.stable = r.detectable ? Verdict::yes : Verdict::no;
    r.stable_note = "requires kappa>0, white-noise observations, mu<<nu";
    r.strong_stable =
        r.num_ergodic_classes == 1 ? Verdict::yes : Verdict::no;
    r.strong_stable_note = "requires kappa>0";
  } else {
    r.stable = Verdict::not_applicable;
    r.strong_stable = Verdict::not_applicable;
    const std::string why = r.kappa_positive
                                ? "counting observations"
                                : "kappa=0 (degenerate observation noise)";
    r.stable_note = "theorem not applicable for " + why + " - use simulation";
    r.strong_stable_note = r.stable_note;
  }
  return r;
}

namespace {

nlohmann::json verdict_json(Verdict v, const std::string& note) {
  nlohmann::json o;
  if (v == Verdict::not_applicable)
    o["verdict"] = "not_applicable";
  else
    o["verdict"] = v == Verdict::yes;
  o["note"] = note;
  return o;
}

}  // namespace

nlohmann::json report_to_json(const StabilityReport& r) {
  nlohmann::json j;
  j["observable"] = r.observable;
  j["detectable"] = r.detectable;
  nlohmann::json ev;
  ev["dim_N"] = r.dim_N;
  if (r.max_real_part)
    ev["max_real_part"] = *r.max_real_part;
  else
    ev["max_real_part"] = "N trivial";
  if (r.restriction_rank) ev["restriction_rank"] = *r.restriction_rank;
  j["detect_evidence"] = ev;
  j["stable"] = verdict_json(r.stable, r.stable_note);
  j["strong_stable"] = verdict_json(r.strong_stable, r.strong_stable_note);
  j["num_ergodic_classes"] = r.num_ergodic_classes;
  j["has_transient"] = r.has_transient;
  j["kappa_positive"] = r.kappa_positive;
  return j;
}

}  // namespace filtstab
