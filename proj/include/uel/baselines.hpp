#pragma once

// Normal-theory comparators for the EL procedures: Sen's variance for the
// AUC, DeLong's for correlated AUCs, the permutation variance for Gehan's
// statistic and the chi-square quadratic form for the multivariate WMW.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "uel/error.hpp"
#include "uel/hypothesis_tests.hpp"
#include "uel/kernels.hpp"
#include "uel/linalg.hpp"
#include "uel/numeric.hpp"
#include "uel/variance.hpp"

namespace uel {

enum class BaselineMethod { sen_normal, delong_normal, gehan_normal, chisq_quadratic };

inline std::string_view to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::sen_normal: return "sen_normal";
    case BaselineMethod::delong_normal: return "delong_normal";
    case BaselineMethod::gehan_normal: return "gehan_normal";
    case BaselineMethod::chisq_quadratic: return "chisq_quadratic";
  }
  return "unknown";
}

namespace detail {

inline TestResult z_result(double estimate, double null_value, double variance) {
  TestResult r;
  r.estimate = {estimate};
  r.null_value = {null_value};
  r.reference = Reference::normal;
  if (estimate_equals_null(estimate, null_value)) {
    r.diagnostics.degenerate = !(variance > 0.0);
    r.diagnostics.variances = {variance};
    return r;
  }
  if (!(variance > 0.0)) throw Error(ErrorKind::degenerate_variance, "normal approximation with zero variance");
  const double z = (estimate - null_value) / std::sqrt(variance);
  r.scaled_statistic = std::abs(z);
  r.p_value = std::erfc(std::abs(z) / std::numbers::sqrt2);
  r.diagnostics.variances = {variance};
  r.diagnostics.note = "z = " + std::to_string(z);
  return r;
}

inline double variance_or_zero(auto&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate_variance) throw;
    return 0.0;
  }
}

}  // namespace detail

/// (zeta_hat - zeta0) / sqrt(V_sen), V_sen centered at zeta_hat; two-sided.
inline TestResult sen_normal_test(std::span<const double> x, std::span<const double> y, double zeta0,
                                  TiePolicy policy = TiePolicy::strict) {
  detail::require_group_sizes(x.size(), y.size());
  const auto km = wmw_matrix(x, y, policy);
  const double est = u_statistic(km)[0];
  return detail::z_result(est, zeta0, detail::variance_or_zero([&] { return sen_variance(km, est); }));
}

inline TestResult delong_normal_test(const MarkerPair& m, double delta0, TiePolicy policy = TiePolicy::strict) {
  detail::require_group_sizes(m.x1.size(), m.y1.size());
  const std::vector<KernelMatrix> markers{wmw_matrix(m.x1, m.y1, policy), wmw_matrix(m.x2, m.y2, policy)};
  const std::vector<double> aucs{u_statistic(markers[0])[0], u_statistic(markers[1])[0]};
  const auto c = delong_components(markers, aucs);
  const double var = delong_diff_variance(c.s10, c.s01, m.x1.size(), m.y1.size());
  return detail::z_result(aucs[0] - aucs[1], delta0, var);
}

inline TestResult gehan_normal_test(const TwoSampleData& data) {
  data.validate();
  const double tau = gehan_statistic(data);
  return detail::z_result(tau, 0.0, gehan_variance(data));
}

/// (zeta_hat - sigma0)' V^{-1} (zeta_hat - sigma0) against chi-square(p).
inline TestResult chisq_quadratic_test(const Sample& x, const Sample& y, std::optional<std::vector<double>> sigma0 = {},
                                       TiePolicy policy = TiePolicy::strict) {
  detail::require_group_sizes(x.size(), y.size());
  const std::size_t p = x.dim();
  const auto null_value = sigma0.value_or(std::vector<double>(p, 0.5));
  const auto km = mv_wmw_matrix(x, y, policy);
  const auto est = u_statistic(km);
  TestResult r;
  r.estimate = est;
  r.null_value = null_value;
  r.reference = Reference::chisq;
  r.reference_dof = static_cast<int>(p);
  std::vector<double> d(p);
  bool at_null = true;
  for (std::size_t k = 0; k < p; ++k) {
    d[k] = est[k] - null_value[k];
    at_null = at_null && detail::estimate_equals_null(est[k], null_value[k]);
  }
  if (at_null) return r;
  std::vector<KernelMatrix> markers;
  for (std::size_t k = 0; k < p; ++k) markers.push_back(km.component(k));
  const Matrix v = delong_covariance(delong_components(markers, est), x.size(), y.size());
  const auto l = cholesky(v, 1e-12);
  if (!l) throw Error(ErrorKind::degenerate_variance, "covariance of the AUC vector is singular");
  const auto sol = cholesky_solve(*l, d);
  double q = 0.0;
  for (std::size_t k = 0; k < p; ++k) q += d[k] * sol[k];
  r.scaled_statistic = q;
  r.p_value = chisq_upper_tail(q, static_cast<int>(p));
  for (std::size_t k = 0; k < p; ++k) r.diagnostics.variances.push_back(v(k, k));
  return r;
}

}  // namespace uel
