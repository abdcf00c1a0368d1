#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "filtstab/observability.hpp"
#include "test_util.hpp"

using namespace filtstab;

namespace {

const FiniteHmm& preset_model(const char* name) {
  const Preset* p = find_preset(name);
  REQUIRE(p != nullptr);
  return p->model;
}

}  // namespace

TEST_CASE("one_to_one_shortcut checks injectivity of h") {
  CHECK(one_to_one_shortcut(preset_model("E1")));        // h = (0,1)
  CHECK_FALSE(one_to_one_shortcut(preset_model("E2")));  // h = (0,0)
  CHECK_FALSE(one_to_one_shortcut(preset_model("E5")));  // h = (0,1,0)
}

TEST_CASE("linear rank test on the presets") {
  CHECK(linear_rank_test(preset_model("E1")));
  CHECK_FALSE(linear_rank_test(preset_model("E2")));
  CHECK(linear_rank_test(preset_model("E5")));
}

TEST_CASE("E1 is observable through the injective-h shortcut") {
  const auto res = observable_space(preset_model("E1"));
  CHECK(res.is_observable);
  CHECK(res.O.dim() == 2);
  CHECK(res.N.dim() == 0);
  CHECK(res.shortcut_used == ObsShortcut::one_to_one_h);
}

TEST_CASE("E2 has the constants as its observable space") {
  const auto res = observable_space(preset_model("E2"));
  CHECK_FALSE(res.is_observable);
  REQUIRE(res.O.dim() == 1);
  REQUIRE(res.N.dim() == 1);
  CHECK(res.O.contains(Eigen::VectorXd::Ones(2), 1e-10));
  CHECK(res.N.contains(testutil::vec2(1, -1) / std::sqrt(2.0), 1e-10));
  CHECK(res.shortcut_used == ObsShortcut::none);
}

TEST_CASE("E5 becomes observable after one growth round") {
  const FiniteHmm& m = preset_model("E5");
  const auto res = observable_space(m);
  CHECK(res.is_observable);
  CHECK(res.O.dim() == 3);
  CHECK(res.iterations_used >= 1);
  CHECK(res.iterations_used <= m.d - 1);
  // the vector the iteration must add: L applied to the level-0 indicator
  CHECK(res.O.contains(testutil::vec3(0, 0, -1), 1e-10));
}

TEST_CASE("shortcuts can be disabled without changing the answer") {
  ObservableSpaceOptions plain;
  plain.use_one_to_one = false;
  plain.use_rank_test = false;
  for (const char* name : {"E1", "E2", "E3", "E4", "E5", "E6"}) {
    CAPTURE(name);
    const auto fast = observable_space(preset_model(name));
    const auto slow = observable_space(preset_model(name), plain);
    CHECK(fast.O.dim() == slow.O.dim());
    CHECK(fast.is_observable == slow.is_observable);
    CHECK(slow.shortcut_used == ObsShortcut::none);
  }
}

TEST_CASE("rank-test option is only an accelerator") {
  ObservableSpaceOptions with_rank;
  with_rank.use_one_to_one = false;
  with_rank.use_rank_test = true;
  for (const char* name : {"E1", "E2", "E5"}) {
    CAPTURE(name);
    const auto a = observable_space(preset_model(name), with_rank);
    const auto b = observable_space(preset_model(name));
    CHECK(a.O.dim() == b.O.dim());
    CHECK(a.is_observable == b.is_observable);
  }
}

TEST_CASE("brute force on the pinned examples") {
  SUBCASE("E1 depth 0 already spans the plane") {
    const auto S = brute_force_observable(preset_model("E1"), 0, {0.5});
    CHECK(S.dim() == 2);
  }
  SUBCASE("E2 words all collapse to constants") {
    const auto S = brute_force_observable(preset_model("E2"), 3, {0.5, 1.0});
    CHECK(S.dim() == 1);
    CHECK(S.contains(Eigen::VectorXd::Ones(2), 1e-10));
  }
  SUBCASE("E5 depth 2 reaches full dimension") {
    const auto S = brute_force_observable(preset_model("E5"), 2, {1.0});
    CHECK(S.dim() == 3);
  }
}

TEST_CASE("brute force refuses word explosions up front") {
  // 6 distinct levels, depth 8, two deltas: ~2.8e9 words, over the cap.
  FiniteHmm m = testutil::random_model(3, 6, 2);
  for (int i = 0; i < 6; ++i) m.h[i] = static_cast<double>(i);
  CHECK_THROWS_AS(brute_force_observable(m, 8, {0.3, 0.7}), ExplosionGuard);
}

TEST_CASE("iteration matches brute force on random models") {
  for (std::uint64_t s = 0; s < 12; ++s) {
    const int d = 2 + static_cast<int>(s % 4);
    const FiniteHmm m = testutil::random_model(s, d, 2 + s % 3);
    const auto res = observable_space(m);
    const auto oracle = brute_force_observable(m, d - 1, {0.3, 0.7, 1.1});
    CAPTURE(s);
    CHECK(res.O.dim() == oracle.dim());
    double worst = 0.0;
    for (int c = 0; c < oracle.dim(); ++c)
      worst = std::max(worst, res.O.residual(oracle.basis().col(c)));
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("observable and nonobservable spaces are invariant") {
  const FiniteHmm m = testutil::random_model(21, 6, 3);
  const auto res = observable_space(m);
  const auto ls = level_sets(m);
  REQUIRE(res.O.dim() + res.N.dim() == 6);
  CHECK(res.O.contains(Eigen::VectorXd::Ones(6), 1e-8));
  for (int c = 0; c < res.O.dim(); ++c) {
    const Eigen::VectorXd v = res.O.basis().col(c);
    CHECK(res.O.residual(m.generator * v) < 1e-8);
    for (int k = 0; k < ls.count(); ++k)
      CHECK(res.O.residual(ls.apply(k, v)) < 1e-8);
  }
  for (int c = 0; c < res.N.dim(); ++c) {
    const Eigen::VectorXd w = res.N.basis().col(c);
    CHECK(res.N.residual(m.generator.transpose() * w) < 1e-8);
    for (int k = 0; k < ls.count(); ++k)
      CHECK(res.N.residual(ls.apply(k, w)) < 1e-8);
  }
}

TEST_CASE("a constant observation function observes nothing extra") {
  // For constant h the observable space is exactly span{1}. The generator
  // maps 1 to zero only up to roundoff (diagonal entries accumulate the row
  // sum in a different order), and that noise vector must not be promoted
  // into a new basis direction.
  for (std::uint64_t seed : {std::uint64_t{1033}, std::uint64_t{4}, std::uint64_t{77}}) {
    const int d = 3 + static_cast<int>(seed % 3);
    FiniteHmm m = testutil::random_model(seed, d, 3);
    m.h.setConstant(2.5);
    CAPTURE(seed);
    const auto res = observable_space(m);
    CHECK(res.O.dim() == 1);
    CHECK(res.N.dim() == d - 1);
    CHECK_FALSE(res.is_observable);
    CHECK(res.O.contains(Eigen::VectorXd::Ones(d), 1e-10));
    const auto oracle = brute_force_observable(m, d - 1, {0.3, 0.7, 1.1});
    CHECK(oracle.dim() == 1);
  }
}
