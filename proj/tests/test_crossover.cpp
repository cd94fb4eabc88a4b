#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "uel/crossover.hpp"
#include "uel/random.hpp"

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

struct Effects {
  double seq1_p1 = 0, seq1_p2 = 0, seq2_p1 = 0, seq2_p2 = 0;
};

uel::CrossoverDataset make_dataset(std::uint64_t seed, std::size_t n, const Effects& e, bool baselines,
                                   double sd = 1.0) {
  uel::Rng rng(seed);
  uel::CrossoverDataset d;
  auto fill = [&](std::vector<uel::CrossoverSubject>& seq, const std::string& tag, double p1, double p2) {
    for (std::size_t i = 0; i < n; ++i) {
      const double subject = rng.normal();
      uel::CrossoverSubject s;
      s.id = tag + std::to_string(i);
      s.period1 = subject + p1 + rng.normal(0, sd);
      s.period2 = subject + p2 + rng.normal(0, sd);
      if (baselines) {
        s.baseline = subject + rng.normal(0, sd);
        s.washout = subject + rng.normal(0, sd);
      }
      seq.push_back(s);
    }
  };
  fill(d.seq1, "a", e.seq1_p1, e.seq1_p2);
  fill(d.seq2, "b", e.seq2_p1, e.seq2_p2);
  return d;
}

uel::CrossoverDataset shifted(uel::CrossoverDataset d, double c) {
  for (auto* seq : {&d.seq1, &d.seq2})
    for (auto& s : *seq) {
      s.period1 += c;
      s.period2 += c;
      if (s.baseline) *s.baseline += c;
      if (s.washout) *s.washout += c;
    }
  return d;
}

}  // namespace

TEST(RelativeEffect, HandEvaluatedExample) {
  // Pairs (100,105) -> 0, (100,110) -> 0, (110,105) -> 1, (110,110) -> 0.5.
  const std::vector<double> a{100, 110}, b{105, 110};
  EXPECT_DOUBLE_EQ(uel::relative_effect(a, b), 0.375);
  EXPECT_DOUBLE_EQ(uel::relative_effect(b, a), 0.625);
}

TEST(RelativeEffect, ComplementProperty) {
  uel::Rng rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(7), b(9);
    // Rounded values so ties occur.
    for (double& v : a) v = std::round(rng.normal() * 2);
    for (double& v : b) v = std::round(rng.normal() * 2);
    EXPECT_NEAR(uel::relative_effect(a, b) + uel::relative_effect(b, a), 1.0, 1e-15);
  }
  EXPECT_EQ(kind_of([] { uel::relative_effect(std::vector<double>{}, std::vector<double>{1}); }),
            ErrorKind::empty_group);
}

TEST(CrossoverDataset, ValidationRules) {
  uel::CrossoverDataset d = make_dataset(1, 3, {}, true);
  EXPECT_NO_THROW(d.validate());
  EXPECT_TRUE(d.has_baselines());
  d.seq1[1].washout.reset();
  EXPECT_EQ(kind_of([&] { d.validate(); }), ErrorKind::schema_error);
  auto small = make_dataset(1, 1, {}, false);
  EXPECT_EQ(kind_of([&] { small.validate(); }), ErrorKind::invalid_argument);
  auto plain = make_dataset(2, 4, {}, false);
  EXPECT_FALSE(plain.has_baselines());
  EXPECT_EQ(kind_of([&] { uel::run_pipeline(plain, 0.05, {}, true); }), ErrorKind::schema_error);
  EXPECT_EQ(kind_of([&] { uel::first_order_carryover_test(plain); }), ErrorKind::schema_error);
  EXPECT_EQ(kind_of([&] { uel::run_pipeline(plain, 1.5); }), ErrorKind::invalid_argument);
}

TEST(CrossoverPipeline, ConstantResponsesGiveNoTreatmentEffect) {
  uel::CrossoverDataset d;
  for (int i = 0; i < 4; ++i) {
    d.seq1.push_back({"a" + std::to_string(i), 5.0, 5.0, 5.0, 5.0});
    d.seq2.push_back({"b" + std::to_string(i), 5.0, 5.0, 5.0, 5.0});
  }
  for (bool baselines : {false, true}) {
    const auto rep = uel::run_pipeline(d, 0.05, {}, baselines);
    EXPECT_EQ(rep.final_conclusion, uel::Conclusion::no_treatment_effect);
    for (const auto& s : rep.steps) {
      EXPECT_EQ(s.result.p_value, 1.0) << s.hypothesis;
      EXPECT_FALSE(s.reject);
    }
    EXPECT_FALSE(rep.multiplicity_adjusted);
  }
}

TEST(CrossoverPipeline, TranslationInvariance) {
  const auto d = make_dataset(7, 15, {0.8, 0.0, 0.0, 0.8}, true);
  for (bool baselines : {false, true}) {
    const auto a = uel::run_pipeline(d, 0.05, {}, baselines);
    const auto b = uel::run_pipeline(shifted(d, 37.25), 0.05, {}, baselines);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
      EXPECT_EQ(a.steps[k].hypothesis, b.steps[k].hypothesis);
      EXPECT_NEAR(a.steps[k].result.p_value, b.steps[k].result.p_value, 1e-9);
    }
    EXPECT_EQ(a.final_conclusion, b.final_conclusion);
  }
}

TEST(FirstOrderCarryover, EqualProbabilitiesGiveZeroStatistic) {
  // Washout values repeat the baselines, so both probabilities coincide.
  auto d = make_dataset(3, 8, {}, true);
  for (auto* seq : {&d.seq1, &d.seq2})
    for (auto& s : *seq) s.washout = s.baseline;
  const auto r = uel::first_order_carryover_test(d);
  EXPECT_EQ(r.scaled_statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(CrossoverPipeline, NoCarryoverLeadsToBothPeriodTest) {
  // Treatment A raises the response by 2 in either period, no carryover.
  const auto d = make_dataset(11, 30, {2.0, 0.0, 0.0, 2.0}, false);
  const auto rep = uel::run_pipeline(d);
  ASSERT_GE(rep.steps.size(), 2u);
  EXPECT_EQ(rep.steps[0].hypothesis, "carryover");
  EXPECT_FALSE(rep.steps[0].reject);
  EXPECT_EQ(rep.steps[1].hypothesis, "treatment_both_periods");
  EXPECT_TRUE(rep.steps[1].reject);
  EXPECT_EQ(rep.final_conclusion, uel::Conclusion::treatment_effect_both_periods);
}

TEST(CrossoverPipeline, CarryoverLeadsToFirstPeriodTest) {
  // Effect of A in period 1 only; period 2 identical across sequences makes
  // P(Y11 > Y21) far from P(Y22 > Y12).
  const auto d = make_dataset(5, 40, {2.0, 0.0, 0.0, 0.0}, false);
  const auto rep = uel::run_pipeline(d);
  ASSERT_EQ(rep.steps.size(), 2u);
  EXPECT_TRUE(rep.steps[0].reject);
  EXPECT_EQ(rep.steps[1].hypothesis, "treatment_first_period");
  EXPECT_EQ(rep.final_conclusion, rep.steps[1].reject ? uel::Conclusion::treatment_effect_first_period_only
                                                      : uel::Conclusion::no_treatment_effect);
}

TEST(CrossoverPipeline, BaselineBranchStepNames) {
  const auto d = make_dataset(19, 25, {1.5, 0.0, 0.0, 1.5}, true);
  const auto rep = uel::run_pipeline(d, 0.05, {}, true);
  ASSERT_GE(rep.steps.size(), 2u);
  EXPECT_EQ(rep.steps[0].hypothesis, "first_order_carryover");
  if (!rep.steps[0].reject) {
    EXPECT_EQ(rep.steps[1].hypothesis, "second_order_carryover");
  }
  const auto& last = rep.steps.back();
  bool carry = false;
  for (std::size_t k = 0; k + 1 < rep.steps.size(); ++k) carry = carry || rep.steps[k].reject;
  EXPECT_EQ(last.hypothesis, carry ? "treatment_first_period_change" : "treatment_both_periods");
  EXPECT_TRUE(rep.with_baselines);
}

TEST(CrossoverTests, FirstPeriodTestUsesHalfTies) {
  // Seq 1 values all exceed seq 2: P(A > B) = 1 sits on the boundary.
  const std::vector<double> a{5, 6, 7}, b{1, 2, 3};
  EXPECT_EQ(kind_of([&] { uel::first_period_test(a, b); }), ErrorKind::constraint_infeasible);
  const std::vector<double> c{1, 2, 3}, e{1, 2, 3};
  EXPECT_NEAR(uel::first_period_test(c, e).p_value, 1.0, 1e-9);
}
