#include <gtest/gtest.h>

#include <cmath>

#include "lorentz/optimizer.hpp"
#include "test_util.hpp"

using namespace lorentz;

namespace {

TEST(SteepestDirection, NegatesTimeComponent) {
  const Vec g{2.5, -1.0, 3.0};
  const auto h = steepest_direction(g);
  EXPECT_DOUBLE_EQ(h[0], -2.5);
  EXPECT_DOUBLE_EQ(h[1], -1.0);
  EXPECT_DOUBLE_EQ(h[2], 3.0);
}

TEST(SteepestDirection, Involution) {
  const Vec g{2.5, -1.0, 3.0};
  EXPECT_EQ(steepest_direction(steepest_direction(g)), g);
  const Vec zero{0, 0, 0};
  EXPECT_EQ(steepest_direction(zero), zero);
}

TEST(RiemannianGrad, ZeroGradientMapsToZero) {
  const auto x = lift(Vec{0.4, -0.8});
  const auto t = riemannian_grad(x, Vec{0, 0, 0});
  for (double c : t.vec) EXPECT_DOUBLE_EQ(c, 0.0);
}

TEST(RiemannianGrad, BasepointClosedForm) {
  // at (1,0,0): negate time, then projection adds <x,h>x = a*x, cancelling it
  const LorentzPoint base{Vec{1, 0, 0}};
  const auto t = riemannian_grad(base, Vec{3.0, 2.0, -1.5});
  EXPECT_DOUBLE_EQ(t.vec[0], 0.0);
  EXPECT_DOUBLE_EQ(t.vec[1], 2.0);
  EXPECT_DOUBLE_EQ(t.vec[2], -1.5);
}

TEST(RiemannianGrad, AlwaysTangent) {
  Rng rng(101);
  for (int it = 0; it < 10000; ++it) {
    const auto x = testutil::random_point(rng, 3, 5);
    Vec g(4);
    for (double& c : g) c = rng.uniform(-5, 5);
    const auto t = riemannian_grad(x, g);
    EXPECT_NEAR(lorentz_inner(x.coords, t.vec), 0.0, 1e-10);
  }
}

// hand-derived euclidean gradient of f(theta) = d(theta, y)^2
Vec egrad_of_squared_distance(const LorentzPoint& theta, const LorentzPoint& y) {
  const double beta = -lorentz_inner(theta.coords, y.coords);
  Vec g(theta.ambient_dim(), 0.0);
  if (beta <= 1.0 + 1e-12) return g;
  const double d = std::acosh(beta);
  const double c = -2.0 * d / std::sqrt(beta * beta - 1.0);
  g[0] = -c * y.coords[0];
  for (size_t i = 1; i < g.size(); ++i) g[i] = c * y.coords[i];
  return g;
}

TEST(RsgdStep, ZeroGradientKeepsPoint) {
  const auto x = lift(Vec{0.2, 0.7});
  const auto y = rsgd_step(x, Vec{0, 0, 0}, 0.1);
  EXPECT_EQ(y.coords, x.coords);
}

TEST(RsgdStep, DecreasesSquaredDistanceObjective) {
  Rng rng(103);
  for (int it = 0; it < 200; ++it) {
    const auto theta = testutil::random_point(rng, 3, 2);
    const auto y = testutil::random_point(rng, 3, 2);
    const double before = std::pow(lorentz_distance(theta, y), 2);
    if (before < 1e-8) continue;
    const auto theta2 = rsgd_step(theta, egrad_of_squared_distance(theta, y), 0.01);
    const double after = std::pow(lorentz_distance(theta2, y), 2);
    EXPECT_LT(after, before);
  }
}

TEST(RsgdStep, StepLengthMatchesGradientNorm) {
  // the update is exactly exp-map based, so d(x, x') = eta * |grad|_L
  Rng rng(107);
  for (int it = 0; it < 500; ++it) {
    const auto x = testutil::random_point(rng, 3, 2);
    Vec g(4);
    for (double& c : g) c = rng.uniform(-2, 2);
    const double eta = rng.uniform(0.01, 1.0);
    const auto x2 = rsgd_step(x, g, eta);
    const double grad_norm = tangent_norm(riemannian_grad(x, g));
    EXPECT_NEAR(lorentz_distance(x, x2), eta * grad_norm, 1e-8);
  }
}

TEST(RsgdStep, NonFiniteGradientThrows) {
  const auto x = lift(Vec{0.1, 0.1});
  EXPECT_THROW(rsgd_step(x, Vec{std::nan(""), 0, 0}, 0.1), NumericError);
}

TEST(RsgdStepper, ConstraintHoldsOverManySteps) {
  Rng rng(109);
  OptimizerConfig cfg;
  RsgdStepper stepper(cfg);
  auto x = lift(Vec{0.001, -0.001});
  Vec g(3);
  const auto base = lift(Vec{0, 0});
  for (int step = 0; step < 10000; ++step) {
    // pull toward a random nearby target to stay in a bounded region
    const auto target = lorentz_distance(x, base) > 4.0 ? base
                                                        : testutil::random_point(rng, 2, 2);
    g = egrad_of_squared_distance(x, target);
    stepper.step(x.coords, g, 0.1);
    ASSERT_NEAR(lorentz_inner(x.coords, x.coords), -1.0, 1e-8);
  }
  EXPECT_EQ(stepper.step_count(), 10000);
}

TEST(RsgdStepper, BurninReducesLearningRate) {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.burnin_epochs = 3;
  cfg.burnin_factor = 0.2;
  RsgdStepper stepper(cfg);
  EXPECT_DOUBLE_EQ(stepper.learning_rate(0), 0.1);
  EXPECT_DOUBLE_EQ(stepper.learning_rate(2), 0.1);
  EXPECT_DOUBLE_EQ(stepper.learning_rate(3), 0.5);
}

TEST(OptimizerConfig, Validation) {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = OptimizerConfig{};
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = OptimizerConfig{};
  cfg.burnin_factor = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = OptimizerConfig{};
  cfg.renormalize_every = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(InitEmbeddings, TimeCoordinateBounds) {
  const int n = 10;
  const auto table = init_embeddings(size_t(500), n, 42);
  const double upper = std::sqrt(1.0 + n * 1e-6);
  for (size_t i = 0; i < table.size(); ++i) {
    const auto r = table.row(i);
    EXPECT_GE(r[0], 1.0);
    EXPECT_LE(r[0], upper);
    for (int d = 1; d <= n; ++d) {
      EXPECT_GT(r[d], -0.001);
      EXPECT_LT(r[d], 0.001);
    }
    EXPECT_TRUE(is_on_hyperboloid(r));
  }
}

TEST(InitEmbeddings, DeterministicGivenSeed) {
  const auto a = init_embeddings(size_t(200), 5, 7);
  const auto b = init_embeddings(size_t(200), 5, 7);
  const auto c = init_embeddings(size_t(200), 5, 8);
  ASSERT_EQ(a.size(), b.size());
  bool any_diff_c = false;
  for (size_t i = 0; i < a.size(); ++i) {
    const auto ra = a.row(i), rb = b.row(i), rc = c.row(i);
    for (size_t d = 0; d < ra.size(); ++d) {
      EXPECT_EQ(ra[d], rb[d]);
      any_diff_c |= ra[d] != rc[d];
    }
  }
  EXPECT_TRUE(any_diff_c);
}

TEST(InitEmbeddings, WordnetNounScale) {
  const auto table = init_embeddings(size_t(82115), 10, 1);
  EXPECT_EQ(table.size(), 82115u);
  EXPECT_EQ(table.dim(), 10);
}

TEST(EmbeddingTable, DuplicateIdRejected) {
  EXPECT_THROW(EmbeddingTable({"a", "b", "a"}, 2), DataError);
  EXPECT_THROW(EmbeddingTable({"a"}, 1), std::invalid_argument);
}

TEST(EmbeddingTable, IndexLookup) {
  EmbeddingTable t({"x", "y"}, 3);
  EXPECT_EQ(t.index_of("y"), 1u);
  EXPECT_THROW(t.index_of("z"), DataError);
  EXPECT_TRUE(t.contains("x"));
}

}  // namespace
