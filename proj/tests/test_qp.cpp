// Copyright 2026 The scmopt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "scm/errors.hpp"
#include "scm/qp.hpp"
#include "support/oracles.hpp"

using scm::ConstraintSet;
using scm::PredictorMatrix;
using scm::Vector;
using scm::testing::TestRng;

namespace {

PredictorMatrix random_predictors(TestRng& rng, std::size_t j, std::size_t t0) {
  PredictorMatrix pred;
  pred.target = scm::testing::random_vector(rng, t0);
  pred.controls = scm::testing::random_matrix(rng, t0, j);
  pred.t0 = t0;
  return pred;
}

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

ConstraintSet with_domain(double lo, double hi) {
  ConstraintSet cset;
  cset.intercept_domain = scm::Interval{lo, hi};
  return cset;
}

}  // namespace

TEST_CASE("constraint set feasibility") {
  CHECK_NOTHROW(ConstraintSet{}.validate(3));
  CHECK_THROWS_AS((ConstraintSet{0.0, 0.2, std::nullopt}.validate(3)), scm::InfeasibleConstraints);
  CHECK_NOTHROW((ConstraintSet{0.0, 0.5, std::nullopt}.validate(2)));
  CHECK_THROWS_AS((ConstraintSet{-1.0, 1.0, std::nullopt}.validate(3)), scm::InfeasibleConstraints);
  CHECK_THROWS_AS(ConstraintSet{}.validate(0), scm::InfeasibleConstraints);
  CHECK_THROWS_AS(with_domain(1.0, 0.0).validate(2), scm::InfeasibleConstraints);
  CHECK_NOTHROW(with_domain(0.0, 0.0).validate(2));
}

TEST_CASE("weight vector feasibility tolerance") {
  const ConstraintSet cset;
  CHECK(scm::WeightVector(vec({0.5, 0.5})).is_feasible(cset));
  CHECK(scm::WeightVector(vec({0.5, 0.5 + 5e-11})).is_feasible(cset));
  CHECK_FALSE(scm::WeightVector(vec({0.5, 0.5 + 1e-9})).is_feasible(cset));
  CHECK_FALSE(scm::WeightVector(vec({1.1, -0.1})).is_feasible(cset));
  CHECK(scm::WeightVector(vec({1.1, -0.1})).is_feasible(ConstraintSet{0.2, 2.0, std::nullopt}));
  CHECK(scm::WeightVector::uniform(4)[3] == 0.25);
  CHECK(scm::WeightVector::unit(3, 1)[1] == 1.0);
}

TEST_CASE("projection examples") {
  const ConstraintSet cset;
  auto p = scm::project_simplex_box(vec({0.5, 0.5}), cset);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
  p = scm::project_simplex_box(vec({0.7, 0.7, 0.7}), cset);
  for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  p = scm::project_simplex_box(vec({2.0, 0.0}), cset);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);
  CHECK_THROWS_AS(scm::project_simplex_box(vec({NAN, 0.0}), cset), scm::DataError);
  CHECK_THROWS_AS(scm::project_simplex_box(vec({1.0, 0.0, 0.0}), ConstraintSet{0.0, 0.2, std::nullopt}),
                  scm::InfeasibleConstraints);
}

TEST_CASE("projection matches a 1-D line search for J = 2 and is idempotent and non-expansive") {
  TestRng rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const double cl = rep % 2 == 0 ? 0.0 : scm::testing::uniform_real(rng, 0.0, 1.0);
    const double cu = scm::testing::uniform_real(rng, 0.5, 2.0);
    const ConstraintSet cset{cl, cu, std::nullopt};
    const Vector v = scm::testing::random_vector(rng, 2, 2.0);
    const auto p = scm::project_simplex_box(v, cset);
    // Feasible segment: w1 in [max(-cl, 1-cu), min(cu, 1+cl)], w2 = 1 - w1.
    const double lo = std::max(-cl, 1.0 - cu), hi = std::min(cu, 1.0 + cl);
    const double w1 = std::clamp((v[0] + 1.0 - v[1]) / 2.0, lo, hi);
    CHECK(p[0] == doctest::Approx(w1).epsilon(1e-12));
    CHECK(p.is_feasible(cset));
    const auto pp = scm::project_simplex_box(p.values(), cset);
    CHECK((pp.values() - p.values()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t j = scm::testing::uniform_index(rng, 1, 12);
    const ConstraintSet cset{rep % 3 == 0 ? 0.3 : 0.0, 1.0, std::nullopt};
    const Vector a = scm::testing::random_vector(rng, j, 3.0);
    const Vector b = scm::testing::random_vector(rng, j, 3.0);
    const auto pa = scm::project_simplex_box(a, cset);
    const auto pb = scm::project_simplex_box(b, cset);
    CHECK(pa.is_feasible(cset));
    CHECK((pa.values() - pb.values()).norm() <= (a - b).norm() + 1e-12);
    CHECK((scm::project_simplex_box(pa.values(), cset).values() - pa.values()).cwiseAbs().maxCoeff() <= 1e-12);
    // Variational inequality: (a - pa)'(w - pa) <= 0 for feasible w.
    CHECK((a - pa.values()).dot(pb.values() - pa.values()) <= 1e-10);
  }
}

TEST_CASE("J = 1 forces w = (1)") {
  TestRng rng(1);
  const auto pred = random_predictors(rng, 1, 5);
  const auto report = scm::solve_constrained_ls(pred, ConstraintSet{});
  CHECK(report.converged);
  CHECK(report.weights[0] == 1.0);
  CHECK(scm::kkt_residual(pred, ConstraintSet{}, report.weights) == 0.0);
  CHECK(report.objective == doctest::Approx(scm::testing::direct_loss(pred, vec({1.0}))).epsilon(1e-12));
}

TEST_CASE("exact copy of control 2 gives w = e2 with zero objective") {
  TestRng rng(2);
  auto pred = random_predictors(rng, 4, 8);
  pred.target = pred.controls.col(1);
  const auto report = scm::solve_constrained_ls(pred, ConstraintSet{});
  CHECK(report.converged);
  CHECK(report.weights[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.objective <= 1e-14);
}

TEST_CASE("random J = 3, T0 = 4 instances match the grid oracle") {
  TestRng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto pred = random_predictors(rng, 3, 4);
    const auto report = scm::solve_constrained_ls(pred, ConstraintSet{});
    const auto grid = scm::testing::grid_search_simplex(
        [&](const Vector& w) { return scm::testing::direct_loss(pred, w); }, 3, 1e-3);
    CHECK(report.converged);
    CHECK(report.objective <= grid.value + 1e-12);
    CHECK(report.objective >= grid.value - 1e-6 - 1e-2 * grid.value);
    CHECK(report.kkt_residual <= 1e-8);
  }
}

TEST_CASE("solver report invariants and global optimality proxy") {
  TestRng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t j = scm::testing::uniform_index(rng, 2, 15);
    const std::size_t t0 = scm::testing::uniform_index(rng, 2, 30);
    const ConstraintSet cset{rep % 4 == 0 ? 0.5 : 0.0, rep % 5 == 0 ? 0.4 : 1.0, std::nullopt};
    const auto pred = random_predictors(rng, j, t0);
    const auto report = scm::solve_constrained_ls(pred, cset);
    CAPTURE(j);
    CAPTURE(t0);
    CHECK(report.converged);
    CHECK(report.weights.is_feasible(cset));
    CHECK(report.kkt_residual <= 1e-8);
    CHECK(scm::kkt_residual(pred, cset, report.weights) <= 1e-8);
    const double direct = scm::testing::direct_loss(pred, report.weights.values());
    CHECK(std::abs(report.objective - direct) <= 1e-12 * std::max(1.0, direct));
    CHECK(report.objective >= 0.0);
    for (int k = 0; k < 1000; ++k) {
      const auto w = scm::project_simplex_box(scm::testing::random_vector(rng, j, 0.5) +
                                                  Vector::Constant(static_cast<Eigen::Index>(j), 1.0 / j),
                                              cset);
      if (scm::testing::direct_loss(pred, w.values()) < report.objective - 1e-12) {
        FAIL("sampled feasible point beats the solver");
      }
    }
  }
}

TEST_CASE("permutation equivariance and scale invariance") {
  TestRng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t j = scm::testing::uniform_index(rng, 2, 8);
    const auto pred = random_predictors(rng, j, j + 10);
    const auto base = scm::solve_constrained_ls(pred, ConstraintSet{});
    std::vector<Eigen::Index> perm(j);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    PredictorMatrix permuted = pred;
    for (std::size_t k = 0; k < j; ++k) permuted.controls.col(static_cast<Eigen::Index>(k)) = pred.controls.col(perm[k]);
    const auto p = scm::solve_constrained_ls(permuted, ConstraintSet{});
    for (std::size_t k = 0; k < j; ++k) CHECK(p.weights[k] == doctest::Approx(base.weights[static_cast<std::size_t>(perm[k])]).epsilon(1e-8).scale(1.0));
    CHECK(p.objective == doctest::Approx(base.objective).epsilon(1e-10));

    PredictorMatrix scaled = pred;
    scaled.target *= 3.0;
    scaled.controls *= 3.0;
    const auto s = scm::solve_constrained_ls(scaled, ConstraintSet{});
    CHECK(s.objective / base.objective == doctest::Approx(9.0).epsilon(1e-8));
    CHECK((s.weights.values() - base.weights.values()).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("kkt residual is large at a non-optimal interior point") {
  // Nondegenerate instance with a known gradient: H = I, X0 pulls towards e1.
  PredictorMatrix pred;
  pred.t0 = 3;
  pred.controls = scm::Matrix::Identity(3, 3);
  pred.target = vec({1.0, 0.0, 0.0});
  const scm::WeightVector w(vec({0.2, 0.3, 0.5}));
  CHECK(scm::kkt_residual(pred, ConstraintSet{}, w) > 1e-4);
  const scm::WeightVector opt(vec({1.0, 0.0, 0.0}));
  CHECK(scm::kkt_residual(pred, ConstraintSet{}, opt) <= 1e-12);
}

TEST_CASE("non-finite predictors are rejected") {
  TestRng rng(6);
  auto pred = random_predictors(rng, 2, 3);
  pred.controls(0, 0) = NAN;
  CHECK_THROWS_AS(scm::solve_constrained_ls(pred, ConstraintSet{}), scm::DataError);
}

TEST_CASE("intercept solve needs a domain") {
  TestRng rng(7);
  const auto pred = random_predictors(rng, 2, 3);
  CHECK_THROWS_AS(scm::solve_constrained_ls_intercept(pred, ConstraintSet{}), scm::InfeasibleConstraints);
}

TEST_CASE("intercept absorbs a level shift") {
  TestRng rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t j = scm::testing::uniform_index(rng, 2, 6);
    auto pred = random_predictors(rng, j, 12);
    const auto cset = with_domain(-100, 100);
    const auto base = scm::solve_constrained_ls_intercept(pred, cset);
    pred.target.array() += 10.0;
    const auto shifted = scm::solve_constrained_ls_intercept(pred, cset);
    CHECK(base.converged);
    CHECK(shifted.converged);
    CHECK((shifted.weights.values() - base.weights.values()).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(*shifted.intercept - *base.intercept == doctest::Approx(10.0).epsilon(1e-8));
  }
}

TEST_CASE("J = 1 intercept is the mean pretreatment gap") {
  TestRng rng(9);
  const auto pred = random_predictors(rng, 1, 7);
  const auto report = scm::solve_constrained_ls_intercept(pred, with_domain(-50, 50));
  const double gap = (pred.target - pred.controls.col(0)).mean();
  CHECK(report.weights[0] == 1.0);
  CHECK(*report.intercept == doctest::Approx(gap).epsilon(1e-10));
  // Clipped to the domain when the gap lies outside.
  const auto clipped = scm::solve_constrained_ls_intercept(pred, with_domain(gap + 1.0, gap + 2.0));
  CHECK(*clipped.intercept == doctest::Approx(gap + 1.0).epsilon(1e-12));
}

TEST_CASE("intercept solve matches the 2-D grid oracle") {
  TestRng rng(10);
  for (int rep = 0; rep < 10; ++rep) {
    const auto pred = random_predictors(rng, 2, scm::testing::uniform_index(rng, 3, 10));
    const auto report = scm::solve_constrained_ls_intercept(pred, with_domain(-100, 100));
    const auto grid = scm::testing::grid_search_intercept(pred, 1e-3, -100, 100, 1e-2);
    CHECK(report.converged);
    CHECK(report.objective <= grid.value + 1e-5);
    // Lattice error of the coarse d mesh is up to (step/2)^2; a fine mesh with
    // the same scan closes the gap from below.
    const auto fine = scm::testing::grid_search_intercept(pred, 1e-4, -100, 100, 1e-5);
    CHECK(report.objective <= fine.value + 1e-12);
    CHECK(report.objective >= fine.value - 1e-6);
    CHECK(std::abs(report.objective - scm::testing::direct_loss(pred, report.weights.values(), *report.intercept)) <=
          1e-12 * std::max(1.0, report.objective));
  }
}

TEST_CASE("wide-domain intercept solve equals SCM on unit-demeaned data") {
  TestRng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t j = scm::testing::uniform_index(rng, 2, 8);
    const std::size_t t0 = j + 6;
    auto pred = random_predictors(rng, j, t0);
    const auto with_d = scm::solve_constrained_ls_intercept(pred, with_domain(-1e3, 1e3));
    PredictorMatrix demeaned = pred;
    demeaned.target.array() -= pred.target.mean();
    for (Eigen::Index k = 0; k < demeaned.controls.cols(); ++k) {
      demeaned.controls.col(k).array() -= pred.controls.col(k).mean();
    }
    const auto plain = scm::solve_constrained_ls(demeaned, ConstraintSet{});
    CHECK((with_d.weights.values() - plain.weights.values()).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(scm::kkt_residual(pred, with_domain(-1e3, 1e3), with_d.weights, with_d.intercept) <= 1e-8);
  }
}

TEST_CASE("generic quadratic objective with intercept and kkt certificate") {
  TestRng rng(12);
  const auto pred = random_predictors(rng, 3, 6);
  const auto objective = scm::least_squares_objective(pred, true);
  CHECK(objective.has_intercept);
  CHECK(objective.num_weights() == 3);
  Vector x(4);
  x << 0.2, 0.3, 0.5, -0.4;
  CHECK(objective.value(x) == doctest::Approx(scm::testing::direct_loss(pred, x.head(3), -0.4)).epsilon(1e-12));
  // Finite-difference gradient.
  const Vector g = objective.gradient(x);
  for (Eigen::Index k = 0; k < 4; ++k) {
    Vector e = Vector::Zero(4);
    e[k] = 1e-6;
    CHECK(g[k] == doctest::Approx((objective.value(x + e) - objective.value(x - e)) / 2e-6).epsilon(1e-6));
  }
  CHECK(scm::pretreatment_loss(pred, scm::WeightVector(x.head(3)), -0.4) ==
        doctest::Approx(scm::testing::direct_loss(pred, x.head(3), -0.4)).epsilon(1e-12));
}
