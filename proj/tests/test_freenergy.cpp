#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace actinf;
using testsupport::benchmark_goal;
using testsupport::benchmark_model;
using testsupport::Rng;

namespace {

LinearGaussianModel scalar_model()
{
  LinearGaussianModel m;
  m.A = m.B = m.C = m.W_w = m.W_v = Matrix::Identity(1, 1);
  return m;
}

/// Mass of N(x0;0,1)² N(u;0,1) N(x1;x0+u,1) N(x1;0,1) by tensor-product Simpson quadrature.
double scalar_mass_by_quadrature()
{
  const int n = 240;
  const double lim = 8.0, h = 2.0 * lim / n;
  auto phi = [](double z, double var) { return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var); };
  auto w = [&](int i) { return (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double total = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x0 = -lim + i * h;
    const double fx = phi(x0, 1.0) * phi(x0, 1.0);
    for (int j = 0; j <= n; ++j) {
      const double u = -lim + j * h;
      const double fu = phi(u, 1.0);
      double inner = 0.0;
      for (int k = 0; k <= n; ++k) {
        const double x1 = -lim + k * h;
        inner += w(k) * phi(x1 - x0 - u, 1.0) * phi(x1, 1.0);
      }
      total += w(i) * w(j) * fx * fu * inner;
    }
  }
  return total * std::pow(h / 3.0, 3);
}

}  // namespace

TEST(FutureFreeEnergy, ScalarSingleStepClosedForm)
{
  const auto est = Gaussian::from_covariance(Vector::Zero(1), Matrix::Identity(1, 1));
  const GoalPrior goal{Matrix::Identity(1, 1), Matrix::Identity(1, 1), 1.0};
  const double value = freenergy::future_free_energy(est, scalar_model(), goal, 1);
  EXPECT_NEAR(value, 0.5 * std::log(28.0 * std::numbers::pi * std::numbers::pi), 1e-12);
  EXPECT_NEAR(value, -std::log(scalar_mass_by_quadrature()), 1e-8);
}

TEST(FutureFreeEnergy, DisplacedEstimateCostsMore)
{
  const auto model = benchmark_model();
  const auto goal  = benchmark_goal(1.0);
  const auto centered  = Gaussian::from_precision(Vector::Zero(2), Matrix::Identity(2, 2));
  const auto displaced = Gaussian::from_precision(testsupport::benchmark_x0(), Matrix::Identity(2, 2));
  EXPECT_LT(freenergy::future_free_energy(centered, model, goal, 10),
    freenergy::future_free_energy(displaced, model, goal, 10));
}

TEST(FutureFreeEnergy, IncreasesWithLambdaOffOrigin)
{
  const auto est = Gaussian::from_covariance(Vector::Constant(1, 3.0), Matrix::Identity(1, 1));
  double previous = -std::numeric_limits<double>::infinity();
  for (double lambda : {0.5, 1.0, 2.0, 4.0}) {
    const GoalPrior goal{Matrix::Identity(1, 1), Matrix::Identity(1, 1), lambda};
    const double value = freenergy::future_free_energy(est, scalar_model(), goal, 1);
    const double oracle = testsupport::oracle::dense_future_free_energy(est.mean(), est.covariance(), scalar_model(),
      goal, 1);
    EXPECT_NEAR(value, oracle, 1e-10);
    EXPECT_GT(value, previous);
    previous = value;
  }
}

TEST(FutureFreeEnergy, ZeroLambdaIsUndefined)
{
  const auto est = Gaussian::from_precision(Vector::Zero(2), Matrix::Identity(2, 2));
  EXPECT_THROW(freenergy::future_free_energy(est, benchmark_model(), benchmark_goal(0.0), 3), SingularityError);
}

TEST(FutureFreeEnergy, MatchesDenseJointIntegration)
{
  Rng rng(60);
  for (int trial = 0; trial < 60; ++trial) {
    const auto prob = testsupport::random_problem(rng, 3);
    const Index horizon = rng.integer(1, 3);
    const auto est = testsupport::random_estimate(rng, prob.model.A.rows());
    const double value  = freenergy::future_free_energy(est, prob.model, prob.goal, horizon);
    const double oracle = testsupport::oracle::dense_future_free_energy(est.mean(), est.covariance(), prob.model,
      prob.goal, horizon);
    EXPECT_LT(std::abs(value - oracle) / std::max(1.0, std::abs(oracle)), 1e-8) << trial;
  }
}

TEST(FutureFreeEnergy, EliminationOrderDoesNotMatter)
{
  Rng rng(61);
  for (int trial = 0; trial < 60; ++trial) {
    const auto prob = testsupport::random_problem(rng);
    const Index horizon = rng.integer(1, 10);
    const auto est = testsupport::random_estimate(rng, prob.model.A.rows());
    const double fwd = freenergy::future_free_energy(est, prob.model, prob.goal, horizon,
      freenergy::EliminationOrder::forward);
    const double bwd = freenergy::future_free_energy(est, prob.model, prob.goal, horizon,
      freenergy::EliminationOrder::backward);
    EXPECT_LT(std::abs(fwd - bwd) / std::max(1.0, std::abs(fwd)), 1e-9) << trial;
  }
}

TEST(StepReport, NoObservationsMeansNoPastPart)
{
  const auto model = benchmark_model();
  const auto report = freenergy::step_report(estimation::init(model), model, benchmark_goal(1.0), 10);
  EXPECT_EQ(report.past_part, 0.0);
}

TEST(StepReport, TotalIsPastPlusFuture)
{
  const auto model = benchmark_model();
  auto fs = estimation::init(model);
  fs = estimation::step(fs, Vector::Zero(2), Vector{{24.0, 26.0}}, model);
  const auto report = freenergy::step_report(fs, model, benchmark_goal(1.0), 10);
  EXPECT_EQ(report.total - report.past_part, report.future_part);
  EXPECT_EQ(report.past_part, -fs.log_evidence);
}
