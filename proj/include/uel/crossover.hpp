#pragma once

// Nonparametric analysis of 2x2 crossover trials (sequences AB and BA),
// optionally with baseline and washout measurements, through relative
// effects P(Z_i > Z_j) tested with the EL procedures.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uel/error.hpp"
#include "uel/hypothesis_tests.hpp"
#include "uel/kernels.hpp"

namespace uel {

struct CrossoverSubject {
  std::string id;
  double period1 = 0.0;
  double period2 = 0.0;
  std::optional<double> baseline;
  std::optional<double> washout;
};

struct CrossoverDataset {
  std::vector<CrossoverSubject> seq1;  // AB
  std::vector<CrossoverSubject> seq2;  // BA
  std::string units;

  bool has_baselines() const {
    auto all = [](const std::vector<CrossoverSubject>& s) {
      for (const auto& r : s)
        if (!r.baseline || !r.washout) return false;
      return !s.empty();
    };
    return all(seq1) && all(seq2);
  }

  void validate() const {
    if (seq1.size() < 2 || seq2.size() < 2)
      throw Error(ErrorKind::invalid_argument, "each sequence needs at least 2 subjects");
    for (const auto* seq : {&seq1, &seq2}) {
      const bool first = seq->front().baseline.has_value() && seq->front().washout.has_value();
      for (const auto& r : *seq) {
        const bool has = r.baseline.has_value() && r.washout.has_value();
        if (has != first || r.baseline.has_value() != r.washout.has_value())
          throw Error(ErrorKind::schema_error, "baseline/washout must be present for all subjects of a sequence or none");
      }
    }
  }

  std::vector<double> y(int seq, int period) const {
    const auto& s = seq == 1 ? seq1 : seq2;
    std::vector<double> out;
    for (const auto& r : s) out.push_back(period == 1 ? r.period1 : r.period2);
    return out;
  }
  /// Baseline (period 1) or washout (period 2) measurements.
  std::vector<double> x(int seq, int period) const {
    const auto& s = seq == 1 ? seq1 : seq2;
    std::vector<double> out;
    for (const auto& r : s) {
      const auto& v = period == 1 ? r.baseline : r.washout;
      if (!v) throw Error(ErrorKind::schema_error, "subject " + r.id + " lacks baseline/washout");
      out.push_back(*v);
    }
    return out;
  }
  /// Change from the preceding baseline/washout.
  std::vector<double> z(int seq, int period) const {
    auto yy = y(seq, period);
    const auto xx = x(seq, period);
    for (std::size_t k = 0; k < yy.size(); ++k) yy[k] -= xx[k];
    return yy;
  }
};

/// P(a > b) + 0.5 P(a = b) over all cross pairs.
inline double relative_effect(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::empty_group, "relative_effect needs nonempty samples");
  CompensatedSum s;
  for (double ai : a)
    for (double bj : b) s.add(wmw_kernel(bj, ai, TiePolicy::half));
  return s.value() / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

namespace detail {

inline std::vector<double> negated(std::vector<double> v) {
  for (double& x : v) x = -x;
  return v;
}

// Markers for H0: P(A1 > B1) = P(A2 > B2) with A from sequence 1 subjects and
// B from sequence 2 subjects. I(a > b) is written as I(-a < -b) so both
// markers keep sequence 1 in the group-1 role.
inline MarkerPair greater_than_markers(std::vector<double> a1, std::vector<double> b1, std::vector<double> a2,
                                       std::vector<double> b2) {
  return {negated(std::move(a1)), negated(std::move(b1)), negated(std::move(a2)), negated(std::move(b2))};
}

}  // namespace detail

/// Carryover: H0: P(Y11 > Y21) = P(Y22 > Y12).
inline TestResult carryover_test_2x2(const CrossoverDataset& d, const TestSettings& settings = {}) {
  d.validate();
  // Marker 2 compares P(Y22 > Y12) = P(Y12 < Y22): sequence 1 stays group 1.
  MarkerPair m{detail::negated(d.y(1, 1)), detail::negated(d.y(2, 1)), d.y(1, 2), d.y(2, 2)};
  auto r = correlated_auc_el_test(m, 0.0, TiePolicy::half, settings);
  r.diagnostics.note = "P(Y11>Y21)=" + std::to_string(relative_effect(d.y(1, 1), d.y(2, 1))) +
                       ", P(Y22>Y12)=" + std::to_string(relative_effect(d.y(2, 2), d.y(1, 2)));
  return r;
}

/// Treatment in both periods: H0: P(Y11 > Y21) = 0.5 and P(Y12 > Y22) = 0.5.
inline TestResult treatment_test_both_periods(const CrossoverDataset& d, const TestSettings& settings = {}) {
  d.validate();
  const auto s1 = d.y(1, 1), s2 = d.y(1, 2), t1 = d.y(2, 1), t2 = d.y(2, 2);
  std::vector<double> xv, yv;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    xv.push_back(-s1[i]);
    xv.push_back(-s2[i]);
  }
  for (std::size_t j = 0; j < t1.size(); ++j) {
    yv.push_back(-t1[j]);
    yv.push_back(-t2[j]);
  }
  return mv_wmw_el_test(Sample(2, std::move(xv)), Sample(2, std::move(yv)), std::vector<double>{0.5, 0.5},
                        TiePolicy::half, settings);
}

/// First-period treatment effect: H0: P(A > B) = 0.5 for period-1 outcomes.
inline TestResult first_period_test(std::span<const double> seq1_values, std::span<const double> seq2_values,
                                    const TestSettings& settings = {}) {
  const auto a = detail::negated(std::vector<double>(seq1_values.begin(), seq1_values.end()));
  const auto b = detail::negated(std::vector<double>(seq2_values.begin(), seq2_values.end()));
  return auc_el_test(a, b, 0.5, TiePolicy::half, settings);
}

inline TestResult treatment_test_first_period(const CrossoverDataset& d, const TestSettings& settings = {}) {
  d.validate();
  return first_period_test(d.y(1, 1), d.y(2, 1), settings);
}

/// First-order carryover: H0: P(X11 > X21) = P(X12 > X22).
inline TestResult first_order_carryover_test(const CrossoverDataset& d, const TestSettings& settings = {}) {
  d.validate();
  if (!d.has_baselines()) throw Error(ErrorKind::schema_error, "first-order carryover test needs baselines");
  const auto x11 = d.x(1, 1), x21 = d.x(2, 1), x12 = d.x(1, 2), x22 = d.x(2, 2);
  const double p1 = relative_effect(x11, x21), p2 = relative_effect(x12, x22);
  auto m = detail::greater_than_markers(x11, x21, x12, x22);
  TestResult r;
  if (p1 == p2) {
    // Identical estimates: the constrained and unconstrained EL maxima coincide.
    r = detail::degenerate_result({0.0}, {0.0}, Reference::chi1, "estimated probabilities coincide");
  } else {
    r = correlated_auc_el_test(m, 0.0, TiePolicy::half, settings);
  }
  r.diagnostics.note = "P(X11>X21)=" + std::to_string(p1) + ", P(X12>X22)=" + std::to_string(p2);
  return r;
}

/// Second-order carryover on changes Z = Y - X: H0: P(Z11 > Z21) = P(Z22 > Z12).
inline TestResult second_order_carryover_test(const CrossoverDataset& d, const TestSettings& settings = {}) {
  d.validate();
  if (!d.has_baselines()) throw Error(ErrorKind::schema_error, "second-order carryover test needs baselines");
  const auto z11 = d.z(1, 1), z21 = d.z(2, 1), z12 = d.z(1, 2), z22 = d.z(2, 2);
  MarkerPair m{detail::negated(z11), detail::negated(z21), z12, z22};
  auto r = correlated_auc_el_test(m, 0.0, TiePolicy::half, settings);
  r.diagnostics.note = "P(Z11>Z21)=" + std::to_string(relative_effect(z11, z21)) +
                       ", P(Z22>Z12)=" + std::to_string(relative_effect(z22, z12));
  return r;
}

enum class Conclusion { no_treatment_effect, treatment_effect_both_periods, treatment_effect_first_period_only };

inline std::string_view to_string(Conclusion c) {
  switch (c) {
    case Conclusion::no_treatment_effect: return "no-treatment-effect";
    case Conclusion::treatment_effect_both_periods: return "treatment-effect-both-periods";
    case Conclusion::treatment_effect_first_period_only: return "treatment-effect-first-period-only";
  }
  return "unknown";
}

struct PipelineStep {
  std::string hypothesis;
  TestResult result;
  bool reject = false;
};

struct PipelineReport {
  std::vector<PipelineStep> steps;
  double alpha = 0.05;
  bool with_baselines = false;
  Conclusion final_conclusion = Conclusion::no_treatment_effect;
  // Each step is run at level alpha; no multiplicity adjustment.
  bool multiplicity_adjusted = false;
};

namespace detail {

template <typename Fn>
PipelineStep run_step(std::string_view id, double alpha, Fn&& fn) {
  try {
    PipelineStep s{std::string(id), fn(), false};
    s.reject = s.result.p_value < alpha;
    return s;
  } catch (const Error& e) {
    throw Error(e.kind(), "step '" + std::string(id) + "': " + e.what());
  }
}

}  // namespace detail

/// Two-step procedure (carryover, then treatment) or, with baselines, the
/// three-step procedure (first-order carryover, second-order carryover,
/// treatment).
inline PipelineReport run_pipeline(const CrossoverDataset& d, double alpha = 0.05, const TestSettings& settings = {},
                                   bool use_baselines = false) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
  d.validate();
  if (use_baselines && !d.has_baselines())
    throw Error(ErrorKind::schema_error, "dataset has no baseline/washout measurements");
  PipelineReport rep;
  rep.alpha = alpha;
  rep.with_baselines = use_baselines;
  auto push = [&](std::string_view id, auto&& fn) -> const PipelineStep& {
    rep.steps.push_back(detail::run_step(id, alpha, fn));
    return rep.steps.back();
  };

  bool carryover = false;
  if (!use_baselines) {
    carryover = push("carryover", [&] { return carryover_test_2x2(d, settings); }).reject;
  } else {
    carryover = push("first_order_carryover", [&] { return first_order_carryover_test(d, settings); }).reject;
    if (!carryover)
      carryover = push("second_order_carryover", [&] { return second_order_carryover_test(d, settings); }).reject;
  }

  if (!carryover) {
    const bool effect = push("treatment_both_periods", [&] { return treatment_test_both_periods(d, settings); }).reject;
    rep.final_conclusion = effect ? Conclusion::treatment_effect_both_periods : Conclusion::no_treatment_effect;
  } else if (!use_baselines) {
    const bool effect = push("treatment_first_period", [&] { return treatment_test_first_period(d, settings); }).reject;
    rep.final_conclusion = effect ? Conclusion::treatment_effect_first_period_only : Conclusion::no_treatment_effect;
  } else {
    const bool effect = push("treatment_first_period_change", [&] {
                          return first_period_test(d.z(1, 1), d.z(2, 1), settings);
                        }).reject;
    rep.final_conclusion = effect ? Conclusion::treatment_effect_first_period_only : Conclusion::no_treatment_effect;
  }
  return rep;
}

}  // namespace uel
