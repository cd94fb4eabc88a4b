#include <gtest/gtest.h>

#include <cmath>
#include <variant>
#include <vector>

#include "uel/sim.hpp"

using uel::ErrorKind;
using uel::Family;

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

uel::ScenarioConfig config(Family f, std::size_t n, std::size_t reps, std::uint64_t seed = 1) {
  uel::ScenarioConfig c;
  c.family = f;
  c.n1 = c.n2 = n;
  c.replications = reps;
  c.seed = seed;
  return c;
}

double mc_auc(Family f, double mu, std::size_t draws) {
  uel::Rng rng(2024);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < draws; ++k) {
    const double z = rng.normal();
    const double x = f == Family::normal_vs_normal ? z : std::exp(z);
    const double w = rng.normal(mu, 2.0);
    const double y = f == Family::lognormal_vs_lognormal ? std::exp(w) : w;
    hits += x < y;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace

TEST(Calibration, ClosedFormNormalLocation) {
  // AUC = Phi(mu / sqrt(1 + 4)).
  EXPECT_NEAR(uel::calibrate_location(Family::normal_vs_normal, 0.8), std::sqrt(5.0) * 0.8416212335729143, 1e-12);
  EXPECT_NEAR(uel::calibrate_location(Family::lognormal_vs_lognormal, 0.8), std::sqrt(5.0) * 0.8416212335729143,
              1e-8);
  EXPECT_EQ(kind_of([] { uel::calibrate_location(Family::normal_vs_normal, 1.0); }), ErrorKind::invalid_argument);
}

TEST(Calibration, LognormalVsNormalMatchesMonteCarlo) {
  const std::size_t draws = 4000000;
  for (double target : {0.6, 0.8, 0.9}) {
    const double mu = uel::calibrate_location(Family::lognormal_vs_normal, target);
    const double se = std::sqrt(target * (1 - target) / static_cast<double>(draws));
    EXPECT_NEAR(mc_auc(Family::lognormal_vs_normal, mu, draws), target, 5 * se) << target;
  }
}

TEST(Calibration, MarkerLocationsAchieveTargetAuc) {
  for (Family f : {Family::bivariate_normal_same, Family::bivariate_normal_diff}) {
    const auto loc = uel::calibrate_marker_locations(f, 0.9);
    const auto cov = uel::bivariate_covariances(f);
    EXPECT_NEAR(uel::normal_cdf(loc[0] / std::sqrt(cov.x(0, 0) + cov.y(0, 0))), 0.9, 1e-12);
    EXPECT_NEAR(uel::normal_cdf(loc[1] / std::sqrt(cov.x(1, 1) + cov.y(1, 1))), 0.9, 1e-12);
  }
}

TEST(Calibration, CensoringTargetIsReproducedOnFreshDraws) {
  const uel::WeibullParams g{1.0, 1.0};
  const double d = uel::calibrate_censoring(g, g, 1.0, 0.2, 50, 50);
  uel::Rng rng(777);
  std::size_t censored = 0;
  const std::size_t n = 200000;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = rng.weibull(1.0, 1.0);
    censored += t > uel::censoring_time(rng.uniform(), d, 1.0);
  }
  const double rate = static_cast<double>(censored) / static_cast<double>(n);
  EXPECT_GE(rate, 0.19);
  EXPECT_LE(rate, 0.21);
}

TEST(Calibration, CensoringMonotoneAndEdgeCases) {
  const uel::WeibullParams g{1.5, 2.0};
  const double a = uel::calibrate_censoring(g, g, 1.0, 0.1, 50, 50);
  const double b = uel::calibrate_censoring(g, g, 1.0, 0.3, 50, 50);
  EXPECT_GT(a, b);  // less censoring needs a longer follow-up
  EXPECT_TRUE(std::isinf(uel::calibrate_censoring(g, g, 1.0, 0.0, 50, 50)));
  EXPECT_TRUE(std::isinf(uel::censoring_time(0.3, std::numeric_limits<double>::infinity(), 1.0)));
  // Censoring time lies in (0, D).
  for (double u : {0.001, 0.5, 0.999}) {
    const double c = uel::censoring_time(u, 3.0, 1.0);
    EXPECT_GT(c, 0.0);
    EXPECT_LT(c, 3.0);
  }
}

TEST(Generation, DeterministicPerSeedAndIndex) {
  auto c = config(Family::normal_vs_normal, 20, 100, 9);
  const auto a = std::get<uel::TwoSampleData>(uel::generate(c, 3));
  const auto b = std::get<uel::TwoSampleData>(uel::generate(c, 3));
  const auto other = std::get<uel::TwoSampleData>(uel::generate(c, 4));
  EXPECT_TRUE(std::equal(a.group1.data().begin(), a.group1.data().end(), b.group1.data().begin()));
  EXPECT_FALSE(std::equal(a.group1.data().begin(), a.group1.data().end(), other.group1.data().begin()));
}

TEST(Generation, BivariateCorrelationMatchesConfiguration) {
  auto c = config(Family::bivariate_normal_same, 20000, 100, 5);
  const auto d = std::get<uel::TwoSampleData>(uel::generate(c, 0));
  auto corr = [](const uel::Sample& s) {
    const auto a = s.column(0), b = s.column(1);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ma += a[i] / n;
      mb += b[i] / n;
    }
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      saa += (a[i] - ma) * (a[i] - ma);
      sbb += (b[i] - mb) * (b[i] - mb);
      sab += (a[i] - ma) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
  };
  EXPECT_NEAR(corr(d.group1), 0.9, 0.02);
  EXPECT_NEAR(corr(d.group2), 0.9, 0.02);
}

TEST(Generation, PrintedNullCovarianceIsRejected) {
  auto c = config(Family::mv_null_pair, 20, 100);
  c.params.cov_y = uel::Matrix{{2.5, 2.5}, {2.5, 1.0}};
  EXPECT_EQ(kind_of([&] { uel::prepare(c); }), ErrorKind::invalid_covariance);
  EXPECT_NO_THROW(uel::prepare(config(Family::mv_null_pair, 20, 100)));
}

TEST(Generation, CrossoverDatasetsFollowConfiguration) {
  auto c = config(Family::crossover_model, 6, 100);
  c.params.crossover_baselines = true;
  const auto d = std::get<uel::CrossoverDataset>(uel::generate(c, 0));
  EXPECT_EQ(d.seq1.size(), 6u);
  EXPECT_TRUE(d.has_baselines());
  c.params.crossover_baselines = false;
  EXPECT_FALSE(std::get<uel::CrossoverDataset>(uel::generate(c, 0)).has_baselines());
}

TEST(ConfigValidation, RejectsBadCombinations) {
  auto c = config(Family::normal_vs_normal, 20, 50);
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::invalid_argument);
  c.replications = 100;
  c.test = uel::Procedure::gehan;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::invalid_argument);
  c.test.reset();
  c.baselines = {uel::BaselineMethod::delong_normal};
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::invalid_argument);
  c.baselines = {uel::BaselineMethod::sen_normal};
  EXPECT_NO_THROW(c.validate());
  c.mixture_draws = 500;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::invalid_argument);
  auto x = config(Family::crossover_model, 10, 100);
  x.test = uel::Procedure::crossover_first_order;
  EXPECT_EQ(kind_of([&] { x.validate(); }), ErrorKind::invalid_argument);
  EXPECT_EQ(x.tie_policy(), uel::TiePolicy::half);
  EXPECT_EQ(kind_of([] { uel::enum_from_string(uel::kFamilyNames, "nope", "family"); }), ErrorKind::invalid_argument);
  EXPECT_EQ(uel::enum_from_string(uel::kFamilyNames, "weibull_survival", "family"), Family::weibull_survival);
}

TEST(RunScenario, NullRejectionRateNearNominal) {
  auto c = config(Family::normal_vs_normal, 50, 2000, 11);
  c.params.shift = 0.0;
  c.baselines = {uel::BaselineMethod::sen_normal};
  const auto rep = uel::run_scenario(c);
  ASSERT_EQ(rep.methods.size(), 2u);
  EXPECT_EQ(rep.methods[0].method, "el");
  EXPECT_GE(rep.methods[0].rejection_rate, 0.035);
  EXPECT_LE(rep.methods[0].rejection_rate, 0.065);
  for (const auto& m : rep.methods) {
    EXPECT_EQ(m.completed + m.failures, 2000u);
    EXPECT_NEAR(m.monte_carlo_se,
                std::sqrt(m.rejection_rate * (1 - m.rejection_rate) / static_cast<double>(m.completed)), 1e-15);
  }
}

TEST(RunScenario, PowerExceedsTypeOneError) {
  auto c = config(Family::normal_vs_normal, 50, 300, 12);
  c.params.shift = 1.5;
  const auto power = uel::run_scenario(c);
  c.params.shift = 0.0;
  const auto null = uel::run_scenario(c);
  EXPECT_GT(power.methods[0].rejection_rate, null.methods[0].rejection_rate + 0.2);
}

TEST(RunScenario, WorkerCountDoesNotChangeResults) {
  auto c = config(Family::mv_null_pair, 20, 120, 3);
  c.baselines = {uel::BaselineMethod::chisq_quadratic};
  c.collect_statistics = true;
  const auto a = uel::run_scenario(c);
  c.workers = 4;
  const auto b = uel::run_scenario(c);
  ASSERT_EQ(a.methods.size(), b.methods.size());
  for (std::size_t m = 0; m < a.methods.size(); ++m) {
    EXPECT_EQ(a.methods[m].rejections, b.methods[m].rejections);
    EXPECT_EQ(a.methods[m].failures, b.methods[m].failures);
  }
  ASSERT_EQ(a.el_statistics.size(), b.el_statistics.size());
  for (std::size_t k = 0; k < a.el_statistics.size(); ++k)
    EXPECT_TRUE(a.el_statistics[k] == b.el_statistics[k] ||
                (std::isnan(a.el_statistics[k]) && std::isnan(b.el_statistics[k])));
}

TEST(RunScenario, SurvivalReportsRealizedCensoring) {
  auto c = config(Family::weibull_survival, 40, 100, 21);
  c.baselines = {uel::BaselineMethod::gehan_normal};
  const auto rep = uel::run_scenario(c);
  ASSERT_TRUE(rep.follow_up.has_value());
  ASSERT_TRUE(rep.realized_censoring.has_value());
  EXPECT_NEAR(*rep.realized_censoring, 0.2, 0.03);
}
