#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ressvm/dataset.hpp"
#include "ressvm/losses.hpp"
#include "ressvm/rng.hpp"

using namespace ressvm;

namespace {

Vector random_vector(Rng& rng, Eigen::Index n, double lo = -2.0, double hi = 2.0) {
  Vector v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = rng.uniform(lo, hi);
  return v;
}

// Central finite differences of loss_value; independent of loss_gradient.
Vector fd_loss_gradient(LossKind kind, const Vector& x, int y, const Vector& w, double h = 1e-6) {
  Vector g(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    Vector wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    g[j] = (loss_value(kind, x, y, wp) - loss_value(kind, x, y, wm)) / (2.0 * h);
  }
  return g;
}

double rel_error(const Vector& got, const Vector& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-8);
}

}  // namespace

TEST_CASE("squared hinge values") {
  const Vector w0 = Vector::Zero(2);
  CHECK(loss_value(LossKind::squared_hinge, Vector::Constant(2, 0.7), +1, w0) == 1.0);
  CHECK(loss_value(LossKind::squared_hinge, Vector::Constant(2, -0.3), -1, w0) == 1.0);

  Vector x(2), w(2);
  x << 1, 0;
  w << 2, 0;
  CHECK(loss_value(LossKind::squared_hinge, x, +1, w) == 0.0);  // margin 2 > 1

  Vector x1(1), w1(1);
  x1 << 0.5;
  w1 << 1.0;
  CHECK(loss_value(LossKind::squared_hinge, x1, -1, w1) == Catch::Approx(2.25).epsilon(1e-14));
}

TEST_CASE("log loss values") {
  const Vector w0 = Vector::Zero(3);
  CHECK(loss_value(LossKind::log, Vector::Constant(3, 1.0), +1, w0) ==
        Catch::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(loss_value(LossKind::log, Vector::Constant(3, 1.0), -1, w0) ==
        Catch::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("log loss is overflow-safe for huge margins") {
  Vector x(1), w(1);
  x << 1.0;
  w << 1e4;
  for (const int y : {-1, +1}) {
    const double v = loss_value(LossKind::log, x, y, w);
    CHECK(std::isfinite(v));
    CHECK(loss_gradient(LossKind::log, x, y, w).allFinite());
  }
  // z = 1e4: loss ~ z for the misclassified side, ~0 for the other.
  CHECK(loss_value(LossKind::log, x, -1, w) == Catch::Approx(1e4).epsilon(1e-10));
  CHECK(loss_value(LossKind::log, x, +1, w) <= 1e-100);
}

TEST_CASE("squared hinge gradient endpoints") {
  Vector x(2);
  x << 1, 0;
  const Vector g0 = loss_gradient(LossKind::squared_hinge, x, +1, Vector::Zero(2));
  CHECK(g0[0] == -2.0);
  CHECK(g0[1] == 0.0);

  Vector w(2);
  w << 1, 0;  // margin exactly 1: zero contribution from both sides
  CHECK(loss_gradient(LossKind::squared_hinge, x, +1, w).isZero(0.0));
}

TEST_CASE("gradients match central finite differences") {
  Rng rng(42);
  for (const LossKind kind : {LossKind::squared_hinge, LossKind::log}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(9));
      const Vector x = random_vector(rng, n);
      const int y = rng.uniform_index(2) == 0 ? -1 : +1;
      const Vector w = random_vector(rng, n);
      const Vector ga = loss_gradient(kind, x, y, w);
      const Vector gf = fd_loss_gradient(kind, x, y, w);
      if (gf.norm() < 1e-12) {
        CHECK(ga.norm() < 1e-12);
      } else {
        CHECK(rel_error(ga, gf) < 1e-5);
      }
    }
  }
}

TEST_CASE("losses are convex along random segments") {
  Rng rng(7);
  for (const LossKind kind : {LossKind::squared_hinge, LossKind::log}) {
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(5));
      const Vector x = random_vector(rng, n);
      const int y = rng.uniform_index(2) == 0 ? -1 : +1;
      const Vector w1 = random_vector(rng, n);
      const Vector w2 = random_vector(rng, n);
      const double t = rng.uniform(0.01, 0.99);
      const double lhs = loss_value(kind, x, y, t * w1 + (1.0 - t) * w2);
      const double rhs = t * loss_value(kind, x, y, w1) + (1.0 - t) * loss_value(kind, x, y, w2);
      CHECK(lhs <= rhs + 1e-12);
    }
  }
}

TEST_CASE("loss dimension mismatch is a usage error") {
  CHECK_THROWS_AS(loss_value(LossKind::log, Vector::Zero(3), 1, Vector::Zero(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(loss_gradient(LossKind::squared_hinge, Vector::Zero(2), 0, Vector::Zero(2)),
                  std::invalid_argument);
}

TEST_CASE("instantaneous gradient composes per-sample gradients") {
  Rng rng(3);
  const Objective obj{LossKind::squared_hinge, 1e-3};

  SyntheticSpec spec;
  spec.n = 4;
  spec.N = 20;
  spec.seed = 11;
  const TrainingSet set = generate_synthetic(spec);

  // Regularizer vanishes at the origin.
  const Vector w0 = Vector::Zero(4);
  Vector manual = Vector::Zero(4);
  for (const Sample& s : set.samples())
    manual += loss_gradient(obj.loss, s.x, s.y, w0);
  manual /= static_cast<double>(set.size());
  CHECK((instantaneous_gradient(obj, set.samples(), w0) - manual).norm() < 1e-15);

  // L = 1 degenerates to lambda*w + single-sample gradient.
  const Vector w = random_vector(rng, 4);
  const Sample& s0 = set[0];
  const Vector single = instantaneous_gradient(obj, std::span<const Sample>(&s0, 1), w);
  CHECK((single - (obj.lambda * w + loss_gradient(obj.loss, s0.x, s0.y, w))).norm() < 1e-15);

  CHECK_THROWS_AS(instantaneous_gradient(obj, std::span<const Sample>{}, w),
                  std::invalid_argument);
}

TEST_CASE("full-batch instantaneous gradient differentiates the average objective") {
  Rng rng(19);
  SyntheticSpec spec;
  spec.n = 5;
  spec.N = 50;
  spec.seed = 23;
  const TrainingSet set = generate_synthetic(spec);

  for (const LossKind kind : {LossKind::squared_hinge, LossKind::log}) {
    const Objective obj{kind, 1e-3};
    const Vector w = random_vector(rng, 5, -1.0, 1.0);
    const Vector g = instantaneous_gradient(obj, set.samples(), w);

    // Independent route: gradient of the Eq.-1 style sum, assembled per sample.
    Vector direct = obj.lambda * w;
    for (const Sample& s : set.samples())
      direct += loss_gradient(kind, s.x, s.y, w) / static_cast<double>(set.size());
    CHECK((g - direct).norm() <= 1e-12 * std::max(1.0, direct.norm()));

    // Finite differences of the reported objective.
    Vector fd(5);
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < 5; ++j) {
      Vector wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      fd[j] = (average_objective(obj, set, wp) - average_objective(obj, set, wm)) / (2.0 * h);
    }
    CHECK(rel_error(g, fd) < 1e-5);
  }
}

TEST_CASE("average objective reference values") {
  SyntheticSpec spec;
  spec.n = 3;
  spec.N = 30;
  spec.seed = 5;
  const TrainingSet set = generate_synthetic(spec);

  CHECK(average_objective(Objective{LossKind::squared_hinge, 1e-3}, set, Vector::Zero(3)) == 1.0);

  // lambda = 0, N = 1 degenerates to the bare loss.
  const TrainingSet one(std::vector<Sample>{set[0]});
  Rng rng(77);
  const Vector w = random_vector(rng, 3);
  CHECK(average_objective(Objective{LossKind::log, 0.0}, one, w) ==
        Catch::Approx(loss_value(LossKind::log, set[0].x, set[0].y, w)).epsilon(1e-15));

  // Brute-force re-summation in extended precision.
  const Objective obj{LossKind::squared_hinge, 0.37};
  long double acc = 0.5L * 0.37L * static_cast<long double>(w.squaredNorm());
  for (const Sample& s : set.samples())
    acc += static_cast<long double>(loss_value(obj.loss, s.x, s.y, w)) / set.size();
  CHECK(average_objective(obj, set, w) ==
        Catch::Approx(static_cast<double>(acc)).epsilon(1e-12));

  CHECK_THROWS_AS(average_objective(obj, TrainingSet{}, w), std::invalid_argument);
}

TEST_CASE("loss kind strings") {
  CHECK(to_string(LossKind::squared_hinge) == "squared_hinge");
  CHECK(to_string(LossKind::log) == "log");
  CHECK(loss_kind_from_string("log") == LossKind::log);
  CHECK_THROWS_AS(loss_kind_from_string("hinge"), std::invalid_argument);
}
