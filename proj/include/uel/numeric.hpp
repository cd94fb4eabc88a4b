#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "uel/error.hpp"

namespace uel {

// Neumaier variant of Kahan summation. Sequential, so the result depends only
// on the order of the addends.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Inverse of the standard normal cdf. Acklam's rational approximation
/// followed by one Halley refinement against erfc.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::invalid_argument, "normal_quantile: probability outside [0, 1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

/// Upper tail of chi-square with one degree of freedom: P(Z^2 > s) = erfc(sqrt(s/2)).
inline double chi1_upper_tail(double s) {
  if (s <= 0.0) return 1.0;
  return std::erfc(std::sqrt(0.5 * s));
}

/// Upper tail of chi-square with an integer number of degrees of freedom,
/// via the finite series for the regularized incomplete gamma at integer and
/// half-integer shape.
inline double chisq_upper_tail(double s, int dof) {
  if (dof < 1) throw Error(ErrorKind::invalid_argument, "chisq_upper_tail: dof must be >= 1");
  if (s <= 0.0) return 1.0;
  const double x = 0.5 * s;
  if (dof % 2 == 0) {
    double term = 1.0;
    CompensatedSum series;
    series.add(term);
    for (int j = 1; j < dof / 2; ++j) {
      term *= x / j;
      series.add(term);
    }
    return std::min(1.0, std::exp(-x) * series.value());
  }
  double q = std::erfc(std::sqrt(x));
  if (dof > 1) {
    double term = 2.0 * std::sqrt(x / std::numbers::pi);  // x^{1/2} / Gamma(3/2)
    CompensatedSum series;
    series.add(term);
    for (int j = 1; j <= (dof - 3) / 2; ++j) {
      term *= x / (j + 0.5);
      series.add(term);
    }
    q += std::exp(-x) * series.value();
  }
  return std::min(1.0, q);
}

}  // namespace uel
