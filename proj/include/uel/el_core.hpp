#pragma once

// Constrained empirical likelihood over U-statistic kernel values.
//
// Given centered kernel values psi_k = h_k - theta0 (k ranging over the N
// index sets of the U-statistic), the constrained maximizer of prod w_k is
// w_k = 1 / (N (1 + lambda' psi_k)) where lambda solves
//     sum_k psi_k / (1 + lambda' psi_k) = 0,
// and the log-EL ratio is l = 2 sum_k log(1 + lambda' psi_k).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "uel/error.hpp"
#include "uel/linalg.hpp"
#include "uel/numeric.hpp"

namespace uel {

struct SolverSettings {
  double residual_tol = 1e-10;  // relative to N * eta_hat
  int max_iterations = 100;
  double feasibility_margin = 1e-12;

  void validate() const {
    if (!(residual_tol > 0.0) || max_iterations <= 0 || !(feasibility_margin > 0.0) ||
        !(feasibility_margin < 1.0))
      throw Error(ErrorKind::invalid_argument, "solver settings out of range");
  }
};

/// N kernel values of dimension q, stored row-major.
class CenteredKernelValues {
 public:
  CenteredKernelValues(std::vector<double> values, std::size_t dim)
      : values_(std::move(values)), dim_(dim) {
    if (dim_ == 0) throw Error(ErrorKind::invalid_argument, "kernel dimension must be positive");
    if (values_.size() % dim_ != 0)
      throw Error(ErrorKind::dimension_mismatch, "kernel value count is not a multiple of q");
    if (values_.empty()) throw Error(ErrorKind::invalid_argument, "no kernel values");
    for (double v : values_)
      if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "non-finite kernel value");
  }

  static CenteredKernelValues scalar(std::vector<double> values) {
    return CenteredKernelValues(std::move(values), 1);
  }

  std::size_t size() const { return values_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> operator[](std::size_t k) const {
    return std::span<const double>(values_).subspan(k * dim_, dim_);
  }
  std::span<const double> data() const { return values_; }

  CenteredKernelValues scaled(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return CenteredKernelValues(std::move(v), dim_);
  }

 private:
  std::vector<double> values_;
  std::size_t dim_;
};

struct ElSolution {
  std::vector<double> lambda;
  double log_el_ratio = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool feasible = true;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double log_ratio(const CenteredKernelValues& psi, std::span<const double> lambda) {
  CompensatedSum s;
  for (std::size_t k = 0; k < psi.size(); ++k) s.add(std::log1p(dot(lambda, psi[k])));
  return std::max(0.0, 2.0 * s.value());
}

}  // namespace detail

/// Scalar multiplier by safeguarded Newton on the strictly decreasing
/// estimating function, keeping a bracket inside (-1/max psi, -1/min psi).
inline ElSolution solve_lambda_uni(const CenteredKernelValues& psi, const SolverSettings& settings = {}) {
  settings.validate();
  if (psi.dim() != 1) throw Error(ErrorKind::dimension_mismatch, "solve_lambda_uni requires q = 1");
  const auto v = psi.data();
  const std::size_t n = v.size();

  CompensatedSum sum, sumsq;
  double lo_psi = v[0], hi_psi = v[0];
  for (double x : v) {
    sum.add(x);
    sumsq.add(x * x);
    lo_psi = std::min(lo_psi, x);
    hi_psi = std::max(hi_psi, x);
  }
  if (sumsq.value() == 0.0) return ElSolution{{0.0}, 0.0, 0.0, 0, true};
  if (!(lo_psi < 0.0 && hi_psi > 0.0))
    throw Error(ErrorKind::constraint_infeasible,
                "null value not strictly inside the range of kernel values");

  const double target =
      settings.residual_tol * static_cast<double>(n) * std::sqrt(sumsq.value() / static_cast<double>(n));

  // The root lies on the side of 0 given by the sign of the estimating function at 0.
  const double s0 = sum.value();
  double a = s0 >= 0.0 ? 0.0 : -1.0 / hi_psi;
  double b = s0 >= 0.0 ? -1.0 / lo_psi : 0.0;
  const double margin = settings.feasibility_margin;

  auto feasible = [&](double lam) {
    return 1.0 + lam * lo_psi >= margin && 1.0 + lam * hi_psi >= margin;
  };

  double lam = s0 / sumsq.value();
  if (!(lam > a && lam < b) || !feasible(lam)) lam = 0.5 * (a + b);
  if (s0 == 0.0) lam = 0.0;

  double best_resid = std::numeric_limits<double>::infinity();
  double best_lam = lam;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    CompensatedSum f, df, mag;
    for (double x : v) {
      const double denom = 1.0 + lam * x;
      const double t = x / denom;
      f.add(t);
      df.add(-t * t);
      mag.add(std::abs(t));
    }
    const double fv = f.value();
    const double resid = std::abs(fv);
    if (resid < best_resid) {
      best_resid = resid;
      best_lam = lam;
    }
    // Rounding floor for the residual when weights are extreme.
    const double attainable = std::max(target, 64.0 * std::numeric_limits<double>::epsilon() * mag.value());
    if (resid <= attainable) {
      return ElSolution{{lam}, detail::log_ratio(psi, std::span<const double>(&lam, 1)), resid, it, true};
    }
    if (fv > 0.0) a = lam; else b = lam;
    double next = lam - fv / df.value();
    if (!(next > a && next < b) || !feasible(next)) next = 0.5 * (a + b);
    if (next == lam || b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b))) {
      // Bracket exhausted in floating point: lam is the best representable root.
      if (feasible(lam)) {
        return ElSolution{{lam}, detail::log_ratio(psi, std::span<const double>(&lam, 1)), resid, it, true};
      }
      break;
    }
    lam = next;
  }
  throw Error(ErrorKind::non_convergence,
              "scalar multiplier did not converge; best residual " + std::to_string(best_resid) +
                  " at lambda " + std::to_string(best_lam));
}

/// Vector multiplier by damped Newton ascent of the concave dual
/// sum log(1 + lambda' psi) with backtracking that keeps every 1 + lambda' psi
/// above the feasibility margin.
inline ElSolution solve_lambda_multi(const CenteredKernelValues& psi, const SolverSettings& settings = {}) {
  settings.validate();
  const std::size_t q = psi.dim();
  const std::size_t n = psi.size();
  const double nd = static_cast<double>(n);

  Matrix outer(q, q);
  std::vector<CompensatedSum> sums(q);
  for (std::size_t k = 0; k < n; ++k) {
    const auto x = psi[k];
    for (std::size_t i = 0; i < q; ++i) {
      sums[i].add(x[i]);
      for (std::size_t j = 0; j < q; ++j) outer(i, j) += x[i] * x[j];
    }
  }
  if (outer.trace() == 0.0) return ElSolution{std::vector<double>(q, 0.0), 0.0, 0.0, 0, true};
  const auto outer_chol = cholesky(outer, 1e-12);
  if (!outer_chol)
    throw Error(ErrorKind::singular_hessian, "kernel values do not span q dimensions");

  // Axis-aligned hull boundary: some coordinate never changes sign.
  for (std::size_t i = 0; i < q; ++i) {
    bool has_neg = false, has_pos = false;
    for (std::size_t k = 0; k < n; ++k) {
      has_neg = has_neg || psi[k][i] < 0.0;
      has_pos = has_pos || psi[k][i] > 0.0;
    }
    if (!(has_neg && has_pos))
      throw Error(ErrorKind::constraint_infeasible,
                  "coordinate " + std::to_string(i) + " of the null value is not inside the kernel range");
  }

  std::vector<double> total(q);
  for (std::size_t i = 0; i < q; ++i) total[i] = sums[i].value();
  const double target = settings.residual_tol * nd * std::sqrt(outer.trace() / nd);
  const double margin = settings.feasibility_margin;

  auto min_denominator = [&](std::span<const double> lam) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) m = std::min(m, 1.0 + detail::dot(lam, psi[k]));
    return m;
  };
  auto objective = [&](std::span<const double> lam) {
    CompensatedSum s;
    for (std::size_t k = 0; k < n; ++k) s.add(std::log1p(detail::dot(lam, psi[k])));
    return s.value();
  };

  // First-order start, pulled toward zero until comfortably feasible.
  std::vector<double> lam = cholesky_solve(*outer_chol, total);
  for (int shrink = 0; shrink < 60 && min_denominator(lam) < 0.5; ++shrink)
    for (double& x : lam) x *= 0.5;
  if (min_denominator(lam) < 0.5) std::fill(lam.begin(), lam.end(), 0.0);

  double value = objective(lam);
  double best_resid = std::numeric_limits<double>::infinity();
  double last_mass = nd;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    std::vector<CompensatedSum> grad_sum(q);
    CompensatedSum mass, magnitude;
    Matrix hess(q, q);
    for (std::size_t k = 0; k < n; ++k) {
      const auto x = psi[k];
      const double denom = 1.0 + detail::dot(lam, x);
      const double inv = 1.0 / denom;
      mass.add(inv);
      for (std::size_t i = 0; i < q; ++i) {
        grad_sum[i].add(x[i] * inv);
        magnitude.add(std::abs(x[i] * inv));
        for (std::size_t j = 0; j < q; ++j) hess(i, j) += x[i] * x[j] * inv * inv;
      }
    }
    std::vector<double> grad(q);
    double gnorm2 = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      grad[i] = grad_sum[i].value();
      gnorm2 += grad[i] * grad[i];
    }
    const double resid = std::sqrt(gnorm2);
    last_mass = mass.value();
    best_resid = std::min(best_resid, resid);
    const double attainable =
        std::max(target, 64.0 * std::numeric_limits<double>::epsilon() * magnitude.value());
    // At the dual optimum sum 1/(1 + lambda' psi) = N; mass draining away
    // means lambda is running off to infinity because 0 is outside the hull.
    // Far out along such a ray the gradient also vanishes, so a small
    // residual alone does not certify a root.
    if (resid <= attainable && mass.value() >= 0.5 * nd) {
      return ElSolution{lam, std::max(0.0, 2.0 * objective(lam)), resid, it, true};
    }
    if (mass.value() < 0.5 * nd && (resid <= attainable || mass.value() < 1e-8 * nd))
      throw Error(ErrorKind::constraint_infeasible,
                  "null value outside the convex hull of kernel values");

    // The start had a full-rank Hessian; losing rank later means a few terms
    // dominate as lambda heads off toward a face of the hull.
    const auto hchol = cholesky(hess, 1e-14);
    if (!hchol)
      throw Error(ErrorKind::constraint_infeasible,
                  "null value on the boundary of the convex hull of kernel values (dual Hessian degenerated)");
    const auto step = cholesky_solve(*hchol, grad);
    const double slope = detail::dot(grad, step);

    double t = 1.0;
    bool accepted = false;
    std::vector<double> trial(q);
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(value) + nd);
    for (int half = 0; half < 60; ++half, t *= 0.5) {
      for (std::size_t i = 0; i < q; ++i) trial[i] = lam[i] + t * step[i];
      if (min_denominator(trial) < margin) continue;
      const double tv = objective(trial);
      if (tv >= value + 1e-4 * t * slope - slack) {
        lam = trial;
        value = tv;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (last_mass < 0.5 * nd)
    throw Error(ErrorKind::constraint_infeasible,
                "dual ascent diverged: null value on or outside the convex hull of kernel values");
  throw Error(ErrorKind::non_convergence,
              "vector multiplier did not converge; best residual " + std::to_string(best_resid));
}

/// Dispatches on the kernel dimension.
inline ElSolution el_log_ratio(const CenteredKernelValues& psi, const SolverSettings& settings = {}) {
  return psi.dim() == 1 ? solve_lambda_uni(psi, settings) : solve_lambda_multi(psi, settings);
}

struct WeightReport {
  std::vector<double> weights;
  double total = 0.0;           // sum of weights
  std::vector<double> moment;   // sum of w_k psi_k
};

inline WeightReport weights_from_lambda(const CenteredKernelValues& psi, std::span<const double> lambda) {
  if (lambda.size() != psi.dim()) throw Error(ErrorKind::dimension_mismatch, "lambda has wrong dimension");
  const std::size_t n = psi.size();
  const std::size_t q = psi.dim();
  WeightReport out{std::vector<double>(n), 0.0, std::vector<double>(q, 0.0)};
  CompensatedSum total;
  std::vector<CompensatedSum> moment(q);
  for (std::size_t k = 0; k < n; ++k) {
    const double denom = 1.0 + detail::dot(lambda, psi[k]);
    if (!(denom > 0.0))
      throw Error(ErrorKind::infeasible_lambda, "1 + lambda'psi is not positive at index " + std::to_string(k));
    const double w = 1.0 / (static_cast<double>(n) * denom);
    out.weights[k] = w;
    total.add(w);
    for (std::size_t i = 0; i < q; ++i) moment[i].add(w * psi[k][i]);
  }
  out.total = total.value();
  for (std::size_t i = 0; i < q; ++i) out.moment[i] = moment[i].value();
  return out;
}

/// l * (sum psi^2 / N) / (N * sigma2_hat): the log-EL ratio rescaled to a
/// chi-square(1) limit, with eta^2 estimated by the mean squared kernel value.
inline double scaled_statistic_uni(const CenteredKernelValues& psi, const ElSolution& el, double sigma2_hat) {
  if (psi.dim() != 1) throw Error(ErrorKind::dimension_mismatch, "scaled_statistic_uni requires q = 1");
  CompensatedSum sumsq;
  for (double x : psi.data()) sumsq.add(x * x);
  if (!(sigma2_hat > 0.0) || sumsq.value() == 0.0)
    throw Error(ErrorKind::zero_variance, "variance estimate or kernel spread is zero");
  const double n = static_cast<double>(psi.size());
  return el.log_el_ratio * sumsq.value() / (n * n * sigma2_hat);
}

}  // namespace uel
