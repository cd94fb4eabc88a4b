#pragma once

// Seeded Monte-Carlo harness for Type I error and power of the EL tests and
// their normal-theory comparators.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "uel/baselines.hpp"
#include "uel/crossover.hpp"
#include "uel/error.hpp"
#include "uel/hypothesis_tests.hpp"
#include "uel/kernels.hpp"
#include "uel/linalg.hpp"
#include "uel/numeric.hpp"
#include "uel/random.hpp"

namespace uel {

enum class Family {
  normal_vs_normal,
  lognormal_vs_lognormal,
  lognormal_vs_normal,
  bivariate_normal_same,
  bivariate_normal_diff,
  bivariate_lognormal_same,
  bivariate_lognormal_diff,
  weibull_survival,
  mv_null_pair,
  crossover_model,
};

enum class Procedure {
  auc,
  auc_diff,
  gehan,
  mv_wmw,
  crossover_carryover,
  crossover_treatment_both,
  crossover_treatment_first,
  crossover_first_order,
  crossover_second_order,
};

inline constexpr std::array<std::pair<Family, std::string_view>, 10> kFamilyNames{{
    {Family::normal_vs_normal, "normal_vs_normal"},
    {Family::lognormal_vs_lognormal, "lognormal_vs_lognormal"},
    {Family::lognormal_vs_normal, "lognormal_vs_normal"},
    {Family::bivariate_normal_same, "bivariate_normal_same"},
    {Family::bivariate_normal_diff, "bivariate_normal_diff"},
    {Family::bivariate_lognormal_same, "bivariate_lognormal_same"},
    {Family::bivariate_lognormal_diff, "bivariate_lognormal_diff"},
    {Family::weibull_survival, "weibull_survival"},
    {Family::mv_null_pair, "mv_null_pair"},
    {Family::crossover_model, "crossover_model"},
}};

inline constexpr std::array<std::pair<Procedure, std::string_view>, 9> kProcedureNames{{
    {Procedure::auc, "auc"},
    {Procedure::auc_diff, "auc_diff"},
    {Procedure::gehan, "gehan"},
    {Procedure::mv_wmw, "mv_wmw"},
    {Procedure::crossover_carryover, "crossover_carryover"},
    {Procedure::crossover_treatment_both, "crossover_treatment_both"},
    {Procedure::crossover_treatment_first, "crossover_treatment_first"},
    {Procedure::crossover_first_order, "crossover_first_order"},
    {Procedure::crossover_second_order, "crossover_second_order"},
}};

inline constexpr std::array<std::pair<BaselineMethod, std::string_view>, 4> kBaselineNames{{
    {BaselineMethod::sen_normal, "sen_normal"},
    {BaselineMethod::delong_normal, "delong_normal"},
    {BaselineMethod::gehan_normal, "gehan_normal"},
    {BaselineMethod::chisq_quadratic, "chisq_quadratic"},
}};

template <typename Enum, std::size_t N>
Enum enum_from_string(const std::array<std::pair<Enum, std::string_view>, N>& table, std::string_view name,
                      std::string_view what) {
  for (const auto& [e, n] : table)
    if (n == name) return e;
  throw Error(ErrorKind::invalid_argument, "unknown " + std::string(what) + " '" + std::string(name) + "'");
}

template <typename Enum, std::size_t N>
std::string_view enum_name(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum e) {
  for (const auto& [v, n] : table)
    if (v == e) return n;
  return "unknown";
}

inline std::string_view to_string(Family f) { return enum_name(kFamilyNames, f); }
inline std::string_view to_string(Procedure p) { return enum_name(kProcedureNames, p); }

inline bool is_bivariate_auc_family(Family f) {
  return f == Family::bivariate_normal_same || f == Family::bivariate_normal_diff ||
         f == Family::bivariate_lognormal_same || f == Family::bivariate_lognormal_diff;
}

/// Group covariance matrices of the bivariate AUC families (log scale for
/// the lognormal ones).
struct BivariateCovariances {
  Matrix x, y;
};

inline BivariateCovariances bivariate_covariances(Family f) {
  switch (f) {
    case Family::bivariate_normal_same:
    case Family::bivariate_lognormal_same:
      return {{{1.0, 0.9}, {0.9, 1.0}}, {{4.0, 3.6}, {3.6, 4.0}}};
    case Family::bivariate_normal_diff:
    case Family::bivariate_lognormal_diff:
      return {{{1.0, 1.8}, {1.8, 4.0}}, {{4.0, 7.2}, {7.2, 16.0}}};
    default:
      throw Error(ErrorKind::invalid_argument, "not a bivariate AUC family");
  }
}

// Second-group covariance for the multivariate null: the marginal variances
// 2.5 and 1 with correlation 0.9. The printed matrix with off-diagonal 2.5
// is not positive definite.
inline Matrix default_mv_null_cov_y() {
  const double off = 0.9 * std::sqrt(2.5);
  return {{2.5, off}, {off, 1.0}};
}

struct WeibullParams {
  double shape = 1.0;
  double scale = 1.0;
};

struct ScenarioParameters {
  double target_auc = 0.8;            // null AUC and calibration target
  double shift = 0.0;                 // added to the calibrated location of Y (marker 1 when bivariate)
  std::optional<double> location;     // overrides calibration for univariate AUC families

  WeibullParams weibull1{};
  WeibullParams weibull2{};
  double censoring_target = 0.2;
  double arrival_rate = 1.0;
  std::optional<double> follow_up;    // overrides censoring calibration

  Matrix cov_x{{4.0, 1.5}, {1.5, 2.25}};
  Matrix cov_y = default_mv_null_cov_y();
  std::vector<double> mean_y{0.0, 0.0};
  bool log_scale = false;

  // Crossover model: Y = mu -/+ gamma + pi_j -/+ tau (-/+ theta in period 2) + e.
  double mu = 0.0;
  double gamma = 0.0;
  double period_effect = 0.0;         // pi1 = -pi2
  double tau = 0.0;
  double theta = 0.0;
  double noise_sd = 1.0;
  bool crossover_baselines = false;
  double pi_baseline = 0.0;
  double pi_washout = 0.0;
  double carryover_first_order = 0.0; // lambda in the washout measurements
};

struct ScenarioConfig {
  std::string name = "scenario";
  Family family = Family::normal_vs_normal;
  ScenarioParameters params{};
  std::size_t n1 = 50;
  std::size_t n2 = 50;
  std::size_t replications = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::optional<Procedure> test;      // defaults by family
  std::vector<BaselineMethod> baselines;
  std::optional<TiePolicy> ties;      // strict, or half for the crossover family
  std::size_t mixture_draws = 20000;
  unsigned workers = 1;
  bool collect_statistics = false;

  Procedure procedure() const {
    if (test) return *test;
    switch (family) {
      case Family::normal_vs_normal:
      case Family::lognormal_vs_lognormal:
      case Family::lognormal_vs_normal: return Procedure::auc;
      case Family::weibull_survival: return Procedure::gehan;
      case Family::mv_null_pair: return Procedure::mv_wmw;
      case Family::crossover_model: return Procedure::crossover_carryover;
      default: return Procedure::auc_diff;
    }
  }
  TiePolicy tie_policy() const {
    return ties.value_or(family == Family::crossover_model ? TiePolicy::half : TiePolicy::strict);
  }

  void validate() const {
    if (replications < 100) throw Error(ErrorKind::invalid_argument, "replications must be >= 100");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
    if (n1 < 2 || n2 < 2) throw Error(ErrorKind::invalid_argument, "group sizes must be >= 2");
    if (mixture_draws < 10000) throw Error(ErrorKind::invalid_argument, "mixture draws must be >= 10000");
    const Procedure p = procedure();
    auto expect = [&](bool ok) {
      if (!ok)
        throw Error(ErrorKind::invalid_argument,
                    "test '" + std::string(to_string(p)) + "' does not apply to family '" +
                        std::string(to_string(family)) + "'");
    };
    switch (p) {
      case Procedure::auc:
        expect(family == Family::normal_vs_normal || family == Family::lognormal_vs_lognormal ||
               family == Family::lognormal_vs_normal);
        break;
      case Procedure::auc_diff: expect(is_bivariate_auc_family(family)); break;
      case Procedure::gehan: expect(family == Family::weibull_survival); break;
      case Procedure::mv_wmw: expect(family == Family::mv_null_pair || is_bivariate_auc_family(family)); break;
      default: expect(family == Family::crossover_model);
    }
    if ((p == Procedure::crossover_first_order || p == Procedure::crossover_second_order) &&
        !params.crossover_baselines)
      throw Error(ErrorKind::invalid_argument, "carryover tests on baselines need crossover_baselines = true");
    for (auto b : baselines) {
      const bool ok = (b == BaselineMethod::sen_normal && p == Procedure::auc) ||
                      (b == BaselineMethod::delong_normal && p == Procedure::auc_diff) ||
                      (b == BaselineMethod::gehan_normal && p == Procedure::gehan) ||
                      (b == BaselineMethod::chisq_quadratic && p == Procedure::mv_wmw);
      if (!ok)
        throw Error(ErrorKind::invalid_argument,
                    "baseline '" + std::string(to_string(b)) + "' does not apply to test '" +
                        std::string(to_string(p)) + "'");
    }
    if (family == Family::weibull_survival &&
        !(params.censoring_target >= 0.0 && params.censoring_target < 1.0))
      throw Error(ErrorKind::invalid_argument, "censoring target must lie in [0, 1)");
  }
};

// --- calibration ------------------------------------------------------------

namespace detail {

inline double adaptive_simpson(const auto& f, double a, double b, double fa, double fm, double fb, double whole,
                               double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const auto& f, double a, double b, double tol = 1e-12) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50);
}

/// P(Y > X) for X = exp(Z), Z ~ N(0, 1), Y ~ N(mu, 2^2).
inline double lognormal_vs_normal_auc(double mu) {
  return integrate([mu](double z) { return normal_cdf((mu - std::exp(z)) / 2.0) * normal_pdf(z); }, -12.0, 12.0);
}

}  // namespace detail

/// Location of Y giving P(Y > X) = target for a univariate AUC family.
inline double calibrate_location(Family family, double target) {
  if (!(target > 0.0 && target < 1.0)) throw Error(ErrorKind::invalid_argument, "target AUC must lie in (0, 1)");
  switch (family) {
    case Family::normal_vs_normal:
    case Family::lognormal_vs_lognormal:
      // Y - X ~ N(mu, 1 + 4) on the (log) scale.
      return std::sqrt(5.0) * normal_quantile(target);
    case Family::lognormal_vs_normal: {
      double lo = -60.0, hi = 60.0;
      for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (detail::lognormal_vs_normal_auc(mid) < target ? lo : hi) = mid;
      }
      const double mu = 0.5 * (lo + hi);
      if (std::abs(detail::lognormal_vs_normal_auc(mu) - target) > 1e-6)
        throw Error(ErrorKind::non_convergence, "location calibration missed the target AUC");
      return mu;
    }
    default:
      throw Error(ErrorKind::invalid_argument, "calibrate_location: not a univariate AUC family");
  }
}

/// Per-marker locations of Y making both marginal AUCs equal to target.
inline std::array<double, 2> calibrate_marker_locations(Family family, double target) {
  if (!(target > 0.0 && target < 1.0)) throw Error(ErrorKind::invalid_argument, "target AUC must lie in (0, 1)");
  const auto cov = bivariate_covariances(family);
  const double z = normal_quantile(target);
  return {std::sqrt(cov.x(0, 0) + cov.y(0, 0)) * z, std::sqrt(cov.x(1, 1) + cov.y(1, 1)) * z};
}

/// Censoring time of a subject entering at an Exp(arrival_rate) time,
/// conditioned on entry before the study closes at `follow_up`.
inline double censoring_time(double u, double follow_up, double arrival_rate) {
  if (!std::isfinite(follow_up)) return std::numeric_limits<double>::infinity();
  const double entry = -std::log1p(-u * -std::expm1(-arrival_rate * follow_up)) / arrival_rate;
  return follow_up - entry;
}

/// Study length giving the requested overall censoring proportion, found by
/// bisection against a fixed 10^5-subject calibration sample.
inline double calibrate_censoring(WeibullParams g1, WeibullParams g2, double arrival_rate, double target_rate,
                                  std::size_t n1, std::size_t n2) {
  if (!(target_rate >= 0.0 && target_rate < 1.0))
    throw Error(ErrorKind::invalid_argument, "censoring target must lie in [0, 1)");
  if (target_rate == 0.0) return std::numeric_limits<double>::infinity();
  constexpr std::size_t kSubjects = 100000;
  constexpr std::uint64_t kCalibrationSeed = 0x5EEDCA1Bull;
  Rng rng(kCalibrationSeed);
  const std::size_t m1 = static_cast<std::size_t>(std::llround(
      static_cast<double>(kSubjects) * static_cast<double>(n1) / static_cast<double>(n1 + n2)));
  std::vector<double> t(kSubjects), u(kSubjects);
  for (std::size_t k = 0; k < kSubjects; ++k) {
    const auto& g = k < m1 ? g1 : g2;
    t[k] = rng.weibull(g.shape, g.scale);
    u[k] = rng.uniform();
  }
  auto rate = [&](double follow_up) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < kSubjects; ++k) c += t[k] > censoring_time(u[k], follow_up, arrival_rate);
    return static_cast<double>(c) / static_cast<double>(kSubjects);
  };
  double lo = 1e-9, hi = 1.0;
  while (rate(hi) > target_rate) {
    hi *= 2.0;
    if (hi > 1e12) throw Error(ErrorKind::non_convergence, "censoring calibration could not reach the target");
  }
  for (int it = 0; it < 100 && hi - lo > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) > target_rate ? lo : hi) = mid;
  }
  const double d = 0.5 * (lo + hi);
  if (std::abs(rate(d) - target_rate) > 0.01)
    throw Error(ErrorKind::non_convergence, "censoring calibration missed the target rate");
  return d;
}

// --- data generation --------------------------------------------------------

using GeneratedData = std::variant<TwoSampleData, CrossoverDataset>;

/// Configuration with calibrated quantities resolved.
struct PreparedScenario {
  ScenarioConfig config;
  std::array<double, 2> location{0.0, 0.0};
  double follow_up = std::numeric_limits<double>::infinity();
  double null_value = 0.0;
  Matrix chol_x, chol_y;
};

namespace detail {

inline Matrix covariance_factor(const Matrix& cov) {
  if (!is_symmetric(cov)) throw Error(ErrorKind::invalid_covariance, "covariance matrix is not symmetric");
  auto l = cholesky(cov, 1e-12);
  if (!l) throw Error(ErrorKind::invalid_covariance, "covariance matrix is not positive definite");
  return *l;
}

inline std::vector<double> mvn_draw(Rng& rng, std::span<const double> mean, const Matrix& chol) {
  const std::size_t p = mean.size();
  std::vector<double> z(p), out(mean.begin(), mean.end());
  for (double& v : z) v = rng.normal();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t k = 0; k <= i; ++k) out[i] += chol(i, k) * z[k];
  return out;
}

}  // namespace detail

inline PreparedScenario prepare(const ScenarioConfig& config) {
  config.validate();
  PreparedScenario ps;
  ps.config = config;
  const auto& p = config.params;
  switch (config.family) {
    case Family::normal_vs_normal:
    case Family::lognormal_vs_lognormal:
    case Family::lognormal_vs_normal:
      ps.location[0] = p.location.value_or(calibrate_location(config.family, p.target_auc)) + p.shift;
      ps.null_value = p.target_auc;
      break;
    case Family::bivariate_normal_same:
    case Family::bivariate_normal_diff:
    case Family::bivariate_lognormal_same:
    case Family::bivariate_lognormal_diff: {
      ps.location = calibrate_marker_locations(config.family, p.target_auc);
      ps.location[0] += p.shift;
      const auto cov = bivariate_covariances(config.family);
      ps.chol_x = detail::covariance_factor(cov.x);
      ps.chol_y = detail::covariance_factor(cov.y);
      ps.null_value = 0.0;
      break;
    }
    case Family::weibull_survival:
      ps.follow_up = p.follow_up.value_or(calibrate_censoring(p.weibull1, p.weibull2, p.arrival_rate,
                                                              p.censoring_target, config.n1, config.n2));
      break;
    case Family::mv_null_pair:
      if (p.mean_y.size() != 2) throw Error(ErrorKind::invalid_argument, "mean_y must have 2 entries");
      ps.chol_x = detail::covariance_factor(p.cov_x);
      ps.chol_y = detail::covariance_factor(p.cov_y);
      ps.location = {p.mean_y[0], p.mean_y[1]};
      ps.null_value = 0.5;
      break;
    case Family::crossover_model:
      if (!(p.noise_sd > 0.0)) throw Error(ErrorKind::invalid_argument, "noise_sd must be positive");
      break;
  }
  return ps;
}

/// Dataset of replication `index`; a pure function of (seed, index).
inline GeneratedData generate(const PreparedScenario& ps, std::uint64_t index) {
  const auto& cfg = ps.config;
  const auto& p = cfg.params;
  Rng rng(cfg.seed, index);
  const std::size_t n1 = cfg.n1, n2 = cfg.n2;
  switch (cfg.family) {
    case Family::normal_vs_normal:
    case Family::lognormal_vs_lognormal:
    case Family::lognormal_vs_normal: {
      const bool log_x = cfg.family != Family::normal_vs_normal;
      const bool log_y = cfg.family == Family::lognormal_vs_lognormal;
      std::vector<double> x(n1), y(n2);
      for (double& v : x) v = log_x ? std::exp(rng.normal()) : rng.normal();
      for (double& v : y) {
        const double w = rng.normal(ps.location[0], 2.0);
        v = log_y ? std::exp(w) : w;
      }
      return TwoSampleData{Sample::univariate(std::move(x)), Sample::univariate(std::move(y)), {}, {}};
    }
    case Family::bivariate_normal_same:
    case Family::bivariate_normal_diff:
    case Family::bivariate_lognormal_same:
    case Family::bivariate_lognormal_diff:
    case Family::mv_null_pair: {
      const bool log_scale = cfg.family == Family::bivariate_lognormal_same ||
                             cfg.family == Family::bivariate_lognormal_diff ||
                             (cfg.family == Family::mv_null_pair && p.log_scale);
      const std::array<double, 2> zero{0.0, 0.0};
      std::vector<double> x, y;
      for (std::size_t i = 0; i < n1; ++i)
        for (double v : detail::mvn_draw(rng, zero, ps.chol_x)) x.push_back(log_scale ? std::exp(v) : v);
      for (std::size_t j = 0; j < n2; ++j)
        for (double v : detail::mvn_draw(rng, ps.location, ps.chol_y)) y.push_back(log_scale ? std::exp(v) : v);
      return TwoSampleData{Sample(2, std::move(x)), Sample(2, std::move(y)), {}, {}};
    }
    case Family::weibull_survival: {
      auto draw = [&](std::size_t n, WeibullParams g, std::vector<double>& t, std::vector<int>& c) {
        for (std::size_t k = 0; k < n; ++k) {
          const double event = rng.weibull(g.shape, g.scale);
          const double cens = censoring_time(rng.uniform(), ps.follow_up, p.arrival_rate);
          t.push_back(std::min(event, cens));
          c.push_back(event > cens ? 1 : 0);
        }
      };
      std::vector<double> t1, t2;
      std::vector<int> c1, c2;
      draw(n1, p.weibull1, t1, c1);
      draw(n2, p.weibull2, t2, c2);
      return TwoSampleData{Sample::univariate(std::move(t1)), Sample::univariate(std::move(t2)), std::move(c1),
                           std::move(c2)};
    }
    case Family::crossover_model: {
      CrossoverDataset d;
      const double pi1 = p.period_effect, pi2 = -p.period_effect;
      auto subject = [&](int seq, std::size_t k) {
        const double sign = seq == 1 ? -1.0 : 1.0;
        CrossoverSubject s;
        s.id = (seq == 1 ? "AB-" : "BA-") + std::to_string(k + 1);
        s.period1 = p.mu + sign * p.gamma + pi1 + sign * p.tau + rng.normal(0.0, p.noise_sd);
        s.period2 = p.mu + sign * p.gamma + pi2 - sign * p.tau - sign * p.theta + rng.normal(0.0, p.noise_sd);
        if (p.crossover_baselines) {
          s.baseline = p.mu + sign * p.gamma + p.pi_baseline + rng.normal(0.0, p.noise_sd);
          s.washout = p.mu + sign * p.gamma + p.pi_washout + sign * p.carryover_first_order +
                      rng.normal(0.0, p.noise_sd);
        }
        return s;
      };
      for (std::size_t k = 0; k < n1; ++k) d.seq1.push_back(subject(1, k));
      for (std::size_t k = 0; k < n2; ++k) d.seq2.push_back(subject(2, k));
      return d;
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown family");
}

inline GeneratedData generate(const ScenarioConfig& config, std::uint64_t index) {
  return generate(prepare(config), index);
}

// --- running ----------------------------------------------------------------

struct MethodSummary {
  std::string method;
  std::size_t rejections = 0;
  std::size_t completed = 0;
  std::size_t failures = 0;
  double rejection_rate = 0.0;
  double monte_carlo_se = 0.0;
  double failure_fraction = 0.0;
};

struct ScenarioReport {
  ScenarioConfig config;
  std::vector<MethodSummary> methods;
  std::size_t replications_completed = 0;
  double runtime_seconds = 0.0;
  std::array<double, 2> location{0.0, 0.0};
  std::optional<double> follow_up;
  std::optional<double> realized_censoring;
  std::vector<double> el_statistics;  // per replication, NaN on failure; only when collected
};

namespace detail {

struct MethodOutcome {
  bool failed = true;
  bool reject = false;
  double statistic = std::numeric_limits<double>::quiet_NaN();
};

struct ReplicationOutcome {
  std::vector<MethodOutcome> methods;
  std::size_t censored = 0;
  std::size_t subjects = 0;
};

inline TestResult run_el(const PreparedScenario& ps, const GeneratedData& data, const TestSettings& settings) {
  const auto& cfg = ps.config;
  const TiePolicy ties = cfg.tie_policy();
  switch (cfg.procedure()) {
    case Procedure::auc: {
      const auto& d = std::get<TwoSampleData>(data);
      return auc_el_test(d.group1.data(), d.group2.data(), ps.null_value, ties, settings);
    }
    case Procedure::auc_diff: {
      const auto& d = std::get<TwoSampleData>(data);
      return correlated_auc_el_test(d.group1, d.group2, ps.null_value, ties, settings);
    }
    case Procedure::gehan: return gehan_el_test(std::get<TwoSampleData>(data), settings);
    case Procedure::mv_wmw: {
      const auto& d = std::get<TwoSampleData>(data);
      return mv_wmw_el_test(d.group1, d.group2, std::vector<double>(d.group1.dim(), 0.5), ties, settings);
    }
    case Procedure::crossover_carryover: return carryover_test_2x2(std::get<CrossoverDataset>(data), settings);
    case Procedure::crossover_treatment_both:
      return treatment_test_both_periods(std::get<CrossoverDataset>(data), settings);
    case Procedure::crossover_treatment_first:
      return treatment_test_first_period(std::get<CrossoverDataset>(data), settings);
    case Procedure::crossover_first_order:
      return first_order_carryover_test(std::get<CrossoverDataset>(data), settings);
    case Procedure::crossover_second_order:
      return second_order_carryover_test(std::get<CrossoverDataset>(data), settings);
  }
  throw Error(ErrorKind::invalid_argument, "unknown procedure");
}

inline TestResult run_baseline(BaselineMethod m, const PreparedScenario& ps, const GeneratedData& data) {
  const auto& d = std::get<TwoSampleData>(data);
  const TiePolicy ties = ps.config.tie_policy();
  switch (m) {
    case BaselineMethod::sen_normal: return sen_normal_test(d.group1.data(), d.group2.data(), ps.null_value, ties);
    case BaselineMethod::delong_normal:
      return delong_normal_test(contrast_markers(d.group1, d.group2, AucContrasts::coordinates()), ps.null_value,
                                ties);
    case BaselineMethod::gehan_normal: return gehan_normal_test(d);
    case BaselineMethod::chisq_quadratic:
      return chisq_quadratic_test(d.group1, d.group2, std::vector<double>(d.group1.dim(), 0.5), ties);
  }
  throw Error(ErrorKind::invalid_argument, "unknown baseline");
}

inline MethodOutcome evaluate(auto&& fn, double alpha) {
  MethodOutcome o;
  try {
    const TestResult r = fn();
    o.failed = false;
    o.reject = r.p_value < alpha;
    o.statistic = r.scaled_statistic;
  } catch (const Error&) {
    o.failed = true;
  }
  return o;
}

inline ReplicationOutcome run_replication(const PreparedScenario& ps, std::uint64_t index) {
  const auto& cfg = ps.config;
  const GeneratedData data = generate(ps, index);
  TestSettings settings;
  settings.mixture.draws = cfg.mixture_draws;
  settings.mixture.seed = derive_seed(cfg.seed ^ 0xA5A5A5A5A5A5A5A5ULL, index);
  ReplicationOutcome out;
  out.methods.push_back(evaluate([&] { return run_el(ps, data, settings); }, cfg.alpha));
  for (auto b : cfg.baselines) out.methods.push_back(evaluate([&] { return run_baseline(b, ps, data); }, cfg.alpha));
  if (const auto* d = std::get_if<TwoSampleData>(&data); d && d->censored()) {
    for (int c : *d->censor1) out.censored += static_cast<std::size_t>(c);
    for (int c : *d->censor2) out.censored += static_cast<std::size_t>(c);
    out.subjects = d->n1() + d->n2();
  }
  return out;
}

}  // namespace detail

/// Runs every replication and aggregates in replication order; the worker
/// count changes wall time only.
inline ScenarioReport run_scenario(const ScenarioConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const PreparedScenario ps = prepare(config);
  const std::size_t reps = config.replications;
  std::vector<detail::ReplicationOutcome> outcomes(reps);
  const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(reps)));
  if (workers == 1) {
    for (std::size_t r = 0; r < reps; ++r) outcomes[r] = detail::run_replication(ps, r);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < reps; r += workers) outcomes[r] = detail::run_replication(ps, r);
      });
    for (auto& t : pool) t.join();
  }

  ScenarioReport rep;
  rep.config = config;
  rep.replications_completed = reps;
  rep.location = ps.location;
  if (config.family == Family::weibull_survival) rep.follow_up = ps.follow_up;

  std::vector<std::string> names{"el"};
  for (auto b : config.baselines) names.emplace_back(to_string(b));
  rep.methods.resize(names.size());
  std::size_t censored = 0, subjects = 0;
  for (std::size_t m = 0; m < names.size(); ++m) rep.methods[m].method = names[m];
  for (std::size_t r = 0; r < reps; ++r) {
    const auto& o = outcomes[r];
    censored += o.censored;
    subjects += o.subjects;
    for (std::size_t m = 0; m < names.size(); ++m) {
      auto& s = rep.methods[m];
      if (o.methods[m].failed) {
        ++s.failures;
      } else {
        ++s.completed;
        s.rejections += o.methods[m].reject ? 1 : 0;
      }
    }
    if (config.collect_statistics) rep.el_statistics.push_back(o.methods[0].statistic);
  }
  for (auto& s : rep.methods) {
    if (s.completed > 0) {
      s.rejection_rate = static_cast<double>(s.rejections) / static_cast<double>(s.completed);
      s.monte_carlo_se = std::sqrt(s.rejection_rate * (1.0 - s.rejection_rate) / static_cast<double>(s.completed));
    }
    s.failure_fraction = static_cast<double>(s.failures) / static_cast<double>(reps);
  }
  if (subjects > 0) rep.realized_censoring = static_cast<double>(censored) / static_cast<double>(subjects);
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace uel
