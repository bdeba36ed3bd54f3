#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "vocluster/features.hpp"

using namespace vocluster;

namespace {

// diagram with the given (birth, death) pairs in one dimension
PersistenceDiagram dgm(const std::vector<std::pair<double, double>>& pts, int dim = 0,
                       double cap = 10.0) {
  PersistenceDiagram d;
  d.cap_value = cap;
  for (const auto& [b, dth] : pts) d.points.push_back({b, dth, dim});
  return d;
}

}  // namespace

TEST_CASE("persistent_entropy: atoms, uniform pairs, and a skewed pair") {
  CHECK(persistent_entropy(dgm({}), 0) == 0.0);
  CHECK(persistent_entropy(dgm({{0.0, 2.0}}), 0) == 0.0);
  CHECK(persistent_entropy(dgm({{0.0, 1.0}, {1.0, 2.0}}), 0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // lifetimes 1 and 3
  CHECK(persistent_entropy(dgm({{0.0, 1.0}, {2.0, 5.0}}), 0) ==
        doctest::Approx(0.5623351446188083).epsilon(1e-12));
}

TEST_CASE("persistent_entropy: zero-lifetime points do not contribute") {
  const double base = persistent_entropy(dgm({{0.0, 1.0}, {2.0, 5.0}}), 0);
  const double with_zero = persistent_entropy(dgm({{0.0, 1.0}, {2.0, 5.0}, {3.0, 3.0}}), 0);
  CHECK(base == with_zero);
}

TEST_CASE("persistent_entropy: bounded by the log point count") {
  std::mt19937 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::pair<double, double>> pts;
    const int n = 1 + static_cast<int>(u(gen) * 10);
    for (int i = 0; i < n; ++i) {
      const double b = u(gen);
      pts.emplace_back(b, b + u(gen));
    }
    CHECK(persistent_entropy(dgm(pts), 0) <= std::log(static_cast<double>(n)) + 1e-12);
  }
}

TEST_CASE("diagram_p_norm: euclidean lifetimes") {
  CHECK(diagram_p_norm(dgm({}), 0) == 0.0);
  CHECK(diagram_p_norm(dgm({{1.0, 3.0}}), 0) == doctest::Approx(2.0));
  CHECK(diagram_p_norm(dgm({{0.0, 3.0}, {1.0, 5.0}}), 0) == doctest::Approx(5.0));
}

TEST_CASE("diagram_p_norm: p = 1 coincides with the lifetime sum") {
  const auto d = dgm({{0.0, 1.5}, {0.5, 2.0}, {1.0, 4.0}});
  CHECK(diagram_p_norm(d, 0, 1.0) == doctest::Approx(lifetime_stats(d, 0).sum).epsilon(1e-12));
}

TEST_CASE("diagram_p_norm: adding a point never decreases it") {
  std::mt19937 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, double>> pts;
  double prev = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double b = u(gen);
    pts.emplace_back(b, b + u(gen));
    const double now = diagram_p_norm(dgm(pts), 0);
    CHECK(now >= prev - 1e-12);
    prev = now;
  }
}

TEST_CASE("persistent_betti: half-open interval convention") {
  const auto d = dgm({{0.0, 2.0}, {1.0, 3.0}});
  CHECK(persistent_betti(d, 0, -0.5) == 0);
  CHECK(persistent_betti(d, 0, 1.5) == 2);
  CHECK(persistent_betti(d, 0, 2.0) == 1);  // first point dead at its death value
  CHECK(persistent_betti(d, 0, 3.0) == 0);
}

TEST_CASE("persistent_betti: capped classes stay alive below the cap") {
  const auto d = dgm({{0.0, 5.0}}, 0, 5.0);
  CHECK(persistent_betti(d, 0, 4.9) == 1);
  CHECK(persistent_betti(d, 0, 5.0) == 0);
}

TEST_CASE("lifetime_stats: empty, ties, and a hand-computed triple") {
  const LifetimeStats empty = lifetime_stats(dgm({}), 0);
  CHECK(empty.count == 0.0);
  CHECK(empty.sum == 0.0);
  CHECK(empty.max == 0.0);

  const LifetimeStats ties = lifetime_stats(dgm({{0.0, 2.0}, {1.0, 3.0}}), 0);
  CHECK(ties.count == 2.0);
  CHECK(ties.mean == doctest::Approx(2.0));
  CHECK(ties.std == doctest::Approx(0.0));
  CHECK(ties.max == doctest::Approx(2.0));
  CHECK(ties.sum == doctest::Approx(4.0));

  // lifetimes 1, 2, 3
  const LifetimeStats tri = lifetime_stats(dgm({{0.0, 1.0}, {0.0, 2.0}, {0.0, 3.0}}), 0);
  CHECK(tri.count == 3.0);
  CHECK(tri.mean == doctest::Approx(2.0));
  CHECK(tri.std == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(tri.max == doctest::Approx(3.0));
  CHECK(tri.sum == doctest::Approx(6.0));
}

TEST_CASE("diagram_features: flattening order and the mid-range Betti count") {
  PersistenceDiagram d;
  d.cap_value = 4.0;
  d.points.push_back({0.0, 2.0, 0});
  d.points.push_back({1.0, 3.0, 0});
  d.points.push_back({1.0, 4.0, 1});

  const DiagramFeatures f = diagram_features(d, 1);
  REQUIRE(f.dims.size() == 2);
  // filtration range [0, 4], midpoint 2: the (0,2) class is already dead
  CHECK(f.dims[0].betti_mid == 1.0);
  CHECK(f.dims[1].betti_mid == 1.0);

  const Eigen::VectorXd v = f.flatten();
  REQUIRE(v.size() == 16);
  CHECK(v(0) == f.dims[0].entropy);
  CHECK(v(1) == f.dims[0].p_norm);
  CHECK(v(2) == f.dims[0].betti_mid);
  CHECK(v(3) == f.dims[0].lifetime_count);
  CHECK(v(4) == f.dims[0].lifetime_mean);
  CHECK(v(5) == f.dims[0].lifetime_std);
  CHECK(v(6) == f.dims[0].lifetime_max);
  CHECK(v(7) == f.dims[0].lifetime_sum);
  CHECK(v(8) == f.dims[1].entropy);
  CHECK(v(15) == f.dims[1].lifetime_sum);
}

namespace {

std::vector<DiagramFeatures> random_rows(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DiagramFeatures> rows(n);
  for (auto& r : rows) {
    r.dims.resize(2);
    for (auto& f : r.dims) {
      f.entropy = u(gen);
      f.p_norm = u(gen);
      f.betti_mid = std::floor(u(gen) * 4);
      f.lifetime_count = std::floor(u(gen) * 6) + 1;
      f.lifetime_mean = u(gen);
      f.lifetime_std = u(gen);
      f.lifetime_max = u(gen) + 1.0;
      f.lifetime_sum = u(gen) * 5.0;
    }
  }
  return rows;
}

}  // namespace

TEST_CASE("fit_persistent_variable: two clips define a single direction") {
  auto rows = random_rows(2, 12);
  const auto [model, proj] = fit_persistent_variable(rows);
  CHECK(model.explained_variance_ratio == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(proj.size() == 2);
}

TEST_CASE("fit_persistent_variable: perfectly correlated columns give ratio one") {
  std::vector<DiagramFeatures> rows(6);
  for (int i = 0; i < 6; ++i) {
    rows[i].dims.resize(1);
    const double t = 0.5 * i;
    auto& f = rows[i].dims[0];
    f.entropy = t;
    f.p_norm = 2.0 * t;
    f.betti_mid = t + 1.0;
    f.lifetime_count = 3.0 * t;
    f.lifetime_mean = -t;
    f.lifetime_std = 0.25 * t;
    f.lifetime_max = t;
    f.lifetime_sum = 5.0 * t;
  }
  const auto [model, proj] = fit_persistent_variable(rows);
  CHECK(model.explained_variance_ratio == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit_persistent_variable: axis conventions") {
  auto rows = random_rows(20, 77);
  const auto [model, proj] = fit_persistent_variable(rows);

  CHECK(model.axis.norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(model.axis(7) >= 0.0);  // the first dimension's lifetime_sum loads nonnegatively
  CHECK(model.explained_variance_ratio <= 1.0 + 1e-12);

  double mean = proj.mean();
  CHECK(std::fabs(mean) < 1e-8);  // centered columns project to centered scores
}

TEST_CASE("fit_persistent_variable: constant columns are dropped") {
  auto rows = random_rows(15, 31);
  for (auto& r : rows) r.dims[1].betti_mid = 2.0;  // flat index 10
  const auto [model, proj] = fit_persistent_variable(rows);
  CHECK(model.scale(10) == 0.0);
  CHECK(model.axis(10) == 0.0);
  CHECK(proj.size() == 15);
}

TEST_CASE("fit_persistent_variable: degenerate inputs are rejected") {
  CHECK_THROWS_AS(fit_persistent_variable(random_rows(1, 5)), std::invalid_argument);
  std::vector<DiagramFeatures> flat(4);
  for (auto& r : flat) {
    r.dims.resize(1);
    r.dims[0].entropy = 1.0;  // every column constant
    r.dims[0].lifetime_sum = 2.0;
  }
  CHECK_THROWS_AS(fit_persistent_variable(flat), std::invalid_argument);
}

TEST_CASE("assemble: fourteen dimensions in a fixed order") {
  Eigen::VectorXd mfcc(12);
  for (int i = 0; i < 12; ++i) mfcc(i) = i + 1.0;
  const FeatureVector fv = assemble(mfcc, 100.0, 200.0, "clip", 4);

  const Eigen::VectorXd v = fv.numeric();
  REQUIRE(v.size() == 14);
  for (int i = 0; i < 12; ++i) CHECK(v(i) == i + 1.0);
  CHECK(v(12) == 100.0);
  CHECK(v(13) == 200.0);
  CHECK(fv.id == "clip");
  CHECK(fv.month == 4);

  const FeatureVector again = assemble(mfcc, 100.0, 200.0, "clip", 4);
  CHECK(again.numeric() == v);
}

TEST_CASE("assemble: zero in, zero out") {
  const FeatureVector fv = assemble(Eigen::VectorXd::Zero(12), 0.0, 0.0, "z", 1);
  CHECK(fv.numeric().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assemble: non-finite inputs are rejected with the clip named") {
  Eigen::VectorXd mfcc = Eigen::VectorXd::Zero(12);
  CHECK_THROWS_AS(assemble(mfcc, std::nan(""), 0.0, "bad", 1), std::invalid_argument);
  CHECK_THROWS_AS(assemble(mfcc, 0.0, INFINITY, "bad", 1), std::invalid_argument);
  mfcc(3) = std::nan("");
  try {
    assemble(mfcc, 0.0, 0.0, "offender", 1);
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("offender") != std::string::npos);
  }
}
