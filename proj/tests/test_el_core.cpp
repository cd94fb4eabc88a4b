#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "uel/el_core.hpp"
#include "uel/random.hpp"

using uel::CenteredKernelValues;
using uel::ErrorKind;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const uel::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected uel::Error";
  return ErrorKind::usage_error;
}

double estimating_function(const std::vector<double>& psi, double lambda) {
  double s = 0.0;
  for (double x : psi) s += x / (1.0 + lambda * x);
  return s;
}

}  // namespace

TEST(SolverSettings, RejectsNonPositiveTolerancesAndMargins) {
  uel::SolverSettings s;
  s.residual_tol = 0.0;
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::invalid_argument);
  s = {};
  s.feasibility_margin = 1.0;
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::invalid_argument);
  s = {};
  s.max_iterations = 0;
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::invalid_argument);
}

TEST(CenteredKernelValues, RejectsNonFiniteAndEmpty) {
  EXPECT_EQ(kind_of([] { CenteredKernelValues({1.0, NAN}, 1); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { CenteredKernelValues({}, 1); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { CenteredKernelValues({1.0, 2.0, 3.0}, 2); }), ErrorKind::dimension_mismatch);
}

TEST(SolveLambdaUni, SymmetricValuesGiveZero) {
  const auto s = uel::solve_lambda_uni(CenteredKernelValues::scalar({1.0, -1.0}));
  EXPECT_EQ(s.lambda[0], 0.0);
  EXPECT_EQ(s.residual_norm, 0.0);
  EXPECT_EQ(s.log_el_ratio, 0.0);
}

TEST(SolveLambdaUni, MatchesBisectionOracle) {
  const std::vector<double> psi{0.5, 0.5, -0.5};
  const double oracle = oracle::bisect([&](double l) { return estimating_function(psi, l); }, -1.999999, 1.999999);
  const auto s = uel::solve_lambda_uni(CenteredKernelValues::scalar(psi));
  EXPECT_NEAR(oracle, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.lambda[0], oracle, 1e-12);
  EXPECT_TRUE(s.feasible);
}

TEST(SolveLambdaUni, OneSignedValuesAreInfeasible) {
  EXPECT_EQ(kind_of([] { uel::solve_lambda_uni(CenteredKernelValues::scalar({0.2, 0.7, 1.1})); }),
            ErrorKind::constraint_infeasible);
  EXPECT_EQ(kind_of([] { uel::solve_lambda_uni(CenteredKernelValues::scalar({-0.2, 0.0, -1.1})); }),
            ErrorKind::constraint_infeasible);
}

TEST(SolveLambdaUni, AllZeroValuesGiveZeroRatio) {
  const auto s = uel::solve_lambda_uni(CenteredKernelValues::scalar({0.0, 0.0, 0.0}));
  EXPECT_EQ(s.lambda[0], 0.0);
  EXPECT_EQ(s.log_el_ratio, 0.0);
}

TEST(SolveLambdaUni, StaysInsideFeasibleIntervalForSkewedValues) {
  // One large negative value forces lambda toward -1/min psi.
  std::vector<double> psi(999, 0.01);
  psi.push_back(-1.0);
  const auto s = uel::solve_lambda_uni(CenteredKernelValues::scalar(psi));
  const double oracle = oracle::bisect([&](double l) { return estimating_function(psi, l); }, -99.9999999, 1.0 - 1e-12);
  EXPECT_GT(s.lambda[0], -1.0 / 0.01);
  EXPECT_LT(s.lambda[0], 1.0);
  EXPECT_NEAR(s.lambda[0], oracle, 1e-9 * std::abs(oracle));
}

TEST(SolveLambdaMulti, BalancedPointsGiveZero) {
  const auto s = uel::solve_lambda_multi(CenteredKernelValues({1, 0, -1, 0, 0, 1, 0, -1}, 2));
  EXPECT_NEAR(s.lambda[0], 0.0, 1e-15);
  EXPECT_NEAR(s.lambda[1], 0.0, 1e-15);
  EXPECT_NEAR(s.log_el_ratio, 0.0, 1e-15);
}

TEST(SolveLambdaMulti, CollinearValuesAreSingular) {
  EXPECT_EQ(kind_of([] { uel::solve_lambda_multi(CenteredKernelValues({0.5, 0.5, 0.5, 0.5, -0.5, -0.5}, 2)); }),
            ErrorKind::singular_hessian);
}

TEST(SolveLambdaMulti, ZeroOutsideHullIsInfeasible) {
  // Every coordinate changes sign, but 0 is outside the triangle.
  EXPECT_EQ(kind_of([] {
              uel::solve_lambda_multi(CenteredKernelValues({1.0, 1.0, -1.0, 2.0, 2.0, -0.5, 1.5, 1.5}, 2));
            }),
            ErrorKind::constraint_infeasible);
  // Zero on an edge of the hull.
  EXPECT_EQ(kind_of([] {
              uel::solve_lambda_multi(CenteredKernelValues({-0.5, -0.5, 0.5, 0.5, 0.5, -0.5, 0.5, -0.5, 0.5, 0.0}, 2));
            }),
            ErrorKind::constraint_infeasible);
}

TEST(SolveLambdaMulti, ZeroJustBeyondHypotenuseIsInfeasible) {
  // Triangle with hypotenuse x + y = -0.0033. The gradient vanishes along the
  // escape ray, so only the drained weight mass exposes infeasibility.
  const std::vector<double> v{-0.4992, -0.5041, -0.4992, -0.5041, 0.5008, -0.5041,
                              -0.4992, -0.5041, 0.5008,  -0.5041, -0.4992, 0.4959};
  EXPECT_EQ(kind_of([&] { uel::solve_lambda_multi(CenteredKernelValues(v, 2)); }), ErrorKind::constraint_infeasible);
}

TEST(SolveLambdaMulti, UnitCircleMatchesNelderMeadDualOracle) {
  uel::Rng rng(2024);
  std::vector<double> psi;
  for (int k = 0; k < 200; ++k) {
    const double t = 2.0 * std::numbers::pi * rng.uniform();
    psi.push_back(std::cos(t) + 0.1);
    psi.push_back(std::sin(t) - 0.05);
  }
  const auto s = uel::solve_lambda_multi(CenteredKernelValues(psi, 2));
  EXPECT_LT(s.residual_norm, 1e-8 * 200);
  const auto nm = oracle::nelder_mead_max([&](const std::vector<double>& l) { return oracle::dual_objective(psi, 2, l); },
                                          {0.0, 0.0});
  EXPECT_NEAR(s.lambda[0], nm[0], 1e-6);
  EXPECT_NEAR(s.lambda[1], nm[1], 1e-6);
  EXPECT_NEAR(s.log_el_ratio, 2.0 * oracle::dual_objective(psi, 2, nm), 1e-9);
}

TEST(SolveLambdaMulti, ThreeDimensionalMatchesPrimalOracle) {
  uel::Rng rng(8);
  std::vector<double> psi;
  for (int k = 0; k < 12; ++k)
    for (int i = 0; i < 3; ++i) psi.push_back(rng.normal() + 0.3);
  const auto s = uel::solve_lambda_multi(CenteredKernelValues(psi, 3));
  const auto primal = oracle::maximize_log_weights(psi, 3);
  ASSERT_TRUE(primal.converged);
  EXPECT_NEAR(s.log_el_ratio, primal.log_el_ratio, 1e-8);
  const auto w = uel::weights_from_lambda(CenteredKernelValues(psi, 3), s.lambda);
  for (std::size_t k = 0; k < w.weights.size(); ++k) EXPECT_NEAR(w.weights[k], primal.weights[k], 1e-9);
}

TEST(WeightsFromLambda, ZeroLambdaIsUniform) {
  const auto w = uel::weights_from_lambda(CenteredKernelValues::scalar({0.3, -0.1, 0.2, 0.5, -0.9}), std::vector<double>{0.0});
  for (double x : w.weights) EXPECT_DOUBLE_EQ(x, 0.2);
  EXPECT_NEAR(w.total, 1.0, 1e-15);
}

TEST(WeightsFromLambda, HandEvaluatedAndPrimalOracleAgree) {
  const std::vector<double> psi{0.5, 0.5, -0.5};
  const auto w = uel::weights_from_lambda(CenteredKernelValues::scalar(psi), std::vector<double>{2.0 / 3.0});
  EXPECT_NEAR(w.weights[0], 0.25, 1e-15);
  EXPECT_NEAR(w.weights[1], 0.25, 1e-15);
  EXPECT_NEAR(w.weights[2], 0.5, 1e-15);
  EXPECT_NEAR(w.total, 1.0, 1e-15);
  EXPECT_NEAR(w.moment[0], 0.0, 1e-15);
  const auto primal = oracle::maximize_log_weights(psi, 1);
  ASSERT_TRUE(primal.converged);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(w.weights[k], primal.weights[k], 1e-10);
}

TEST(WeightsFromLambda, NonPositiveDenominatorIsReported) {
  EXPECT_EQ(kind_of([] {
              uel::weights_from_lambda(CenteredKernelValues::scalar({0.5, -0.5}), std::vector<double>{-3.0});
            }),
            ErrorKind::infeasible_lambda);
}

TEST(ElLogRatio, KnownValues) {
  EXPECT_EQ(uel::el_log_ratio(CenteredKernelValues::scalar({1.0, -1.0})).log_el_ratio, 0.0);
  const double expected = 2.0 * (2.0 * std::log(4.0 / 3.0) + std::log(2.0 / 3.0));
  const auto s = uel::el_log_ratio(CenteredKernelValues::scalar({0.5, 0.5, -0.5}));
  EXPECT_NEAR(s.log_el_ratio, expected, 1e-13);
  EXPECT_NEAR(s.log_el_ratio, 0.33980, 1e-5);
  const auto primal = oracle::maximize_log_weights({0.5, 0.5, -0.5}, 1);
  EXPECT_NEAR(s.log_el_ratio, primal.log_el_ratio, 1e-10);
}

TEST(ElLogRatio, ScaleInvariance) {
  const CenteredKernelValues psi = CenteredKernelValues::scalar({0.3, -0.2, 0.7, -0.6, 0.1, 0.05});
  const auto base = uel::el_log_ratio(psi);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    const auto s = uel::el_log_ratio(psi.scaled(c));
    EXPECT_NEAR(s.log_el_ratio, base.log_el_ratio, 1e-10);
    EXPECT_NEAR(s.lambda[0], base.lambda[0] / c, 1e-9 * std::abs(base.lambda[0] / c));
  }
}

TEST(ScaledStatisticUni, VarianceRescalingArithmetic) {
  const auto psi = CenteredKernelValues::scalar({0.5, 0.5, -0.5});
  const auto el = uel::el_log_ratio(psi);
  const double stat = uel::scaled_statistic_uni(psi, el, 0.25 / 9.0);
  EXPECT_NEAR(stat, 3.0 * el.log_el_ratio, 1e-12);
  EXPECT_NEAR(stat, 1.0194, 1e-4);
}

TEST(ScaledStatisticUni, ZeroRatioGivesZeroAndZeroVarianceThrows) {
  const auto psi = CenteredKernelValues::scalar({1.0, -1.0});
  const auto el = uel::el_log_ratio(psi);
  EXPECT_EQ(uel::scaled_statistic_uni(psi, el, 0.3), 0.0);
  EXPECT_EQ(kind_of([&] { uel::scaled_statistic_uni(psi, el, 0.0); }), ErrorKind::zero_variance);
  const auto zero = CenteredKernelValues::scalar({0.0, 0.0});
  EXPECT_EQ(kind_of([&] { uel::scaled_statistic_uni(zero, uel::el_log_ratio(zero), 1.0); }), ErrorKind::zero_variance);
}
