#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "uel/error.hpp"
#include "uel/kernels.hpp"
#include "uel/linalg.hpp"
#include "uel/numeric.hpp"

namespace uel {

/// Per-observation kernel averages V10(X_i) = mean_j phi_ij and
/// V01(Y_j) = mean_i phi_ij of a scalar pairwise kernel.
struct StructuralComponents {
  std::vector<double> v10;
  std::vector<double> v01;
  double center = 0.0;
};

inline StructuralComponents structural_components(const KernelMatrix& km, double center) {
  if (km.dim() != 1) throw Error(ErrorKind::dimension_mismatch, "structural components need a scalar kernel");
  const std::size_t n1 = km.rows(), n2 = km.cols();
  StructuralComponents sc{std::vector<double>(n1), std::vector<double>(n2), center};
  std::vector<CompensatedSum> cols(n2);
  for (std::size_t i = 0; i < n1; ++i) {
    CompensatedSum row;
    for (std::size_t j = 0; j < n2; ++j) {
      const double v = km.scalar(i, j);
      row.add(v);
      cols[j].add(v);
    }
    sc.v10[i] = row.value() / static_cast<double>(n2);
  }
  for (std::size_t j = 0; j < n2; ++j) sc.v01[j] = cols[j].value() / static_cast<double>(n1);
  return sc;
}

/// Sen's estimator S10^2 / n1 + S01^2 / n2 of the variance of the
/// two-sample U-statistic, with the squared deviations taken about `center`.
inline double sen_variance(const KernelMatrix& km, double center) {
  const std::size_t n1 = km.rows(), n2 = km.cols();
  if (n1 < 2 || n2 < 2) throw Error(ErrorKind::invalid_argument, "sen_variance needs n1, n2 >= 2");
  const auto sc = structural_components(km, center);
  CompensatedSum s10, s01;
  for (double v : sc.v10) s10.add((v - center) * (v - center));
  for (double v : sc.v01) s01.add((v - center) * (v - center));
  const double var = s10.value() / static_cast<double>(n1 - 1) / static_cast<double>(n1) +
                     s01.value() / static_cast<double>(n2 - 1) / static_cast<double>(n2);
  if (!(var > 0.0)) throw Error(ErrorKind::degenerate_variance, "structural components all equal the center");
  return var;
}

/// Cross-products of structural components across markers sharing subjects.
struct DelongComponents {
  Matrix s10;
  Matrix s01;
};

inline DelongComponents delong_components(std::span<const KernelMatrix> markers, std::span<const double> centers) {
  if (markers.empty() || markers.size() != centers.size())
    throw Error(ErrorKind::dimension_mismatch, "one center per marker required");
  const std::size_t n1 = markers.front().rows(), n2 = markers.front().cols();
  if (n1 < 2 || n2 < 2) throw Error(ErrorKind::invalid_argument, "delong_components needs n1, n2 >= 2");
  std::vector<StructuralComponents> sc;
  for (std::size_t k = 0; k < markers.size(); ++k) {
    if (markers[k].rows() != n1 || markers[k].cols() != n2)
      throw Error(ErrorKind::dimension_mismatch, "markers differ in group sizes");
    sc.push_back(structural_components(markers[k], centers[k]));
  }
  const std::size_t m = markers.size();
  DelongComponents out{Matrix(m, m), Matrix(m, m)};
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = k; l < m; ++l) {
      CompensatedSum a, b;
      for (std::size_t i = 0; i < n1; ++i) a.add((sc[k].v10[i] - centers[k]) * (sc[l].v10[i] - centers[l]));
      for (std::size_t j = 0; j < n2; ++j) b.add((sc[k].v01[j] - centers[k]) * (sc[l].v01[j] - centers[l]));
      out.s10(k, l) = out.s10(l, k) = a.value() / static_cast<double>(n1 - 1);
      out.s01(k, l) = out.s01(l, k) = b.value() / static_cast<double>(n2 - 1);
    }
  }
  return out;
}

/// Variance of the difference of two correlated AUC estimates.
inline double delong_diff_variance(const Matrix& s10, const Matrix& s01, std::size_t n1, std::size_t n2) {
  if (s10.rows() != 2 || s10.cols() != 2 || s01.rows() != 2 || s01.cols() != 2)
    throw Error(ErrorKind::dimension_mismatch, "delong_diff_variance needs 2x2 components");
  const double v = (s10(0, 0) - 2.0 * s10(0, 1) + s10(1, 1)) / static_cast<double>(n1) +
                   (s01(0, 0) - 2.0 * s01(0, 1) + s01(1, 1)) / static_cast<double>(n2);
  return std::max(0.0, v);
}

/// Covariance matrix of the vector of AUC estimates: S10 / n1 + S01 / n2.
inline Matrix delong_covariance(const DelongComponents& c, std::size_t n1, std::size_t n2) {
  return c.s10 * (1.0 / static_cast<double>(n1)) + c.s01 * (1.0 / static_cast<double>(n2));
}

/// Pooled scores U_i = sum over the pooled sample of Gehan's kernel.
inline std::vector<double> gehan_pooled_scores(std::span<const double> times, std::span<const int> censor) {
  if (times.size() != censor.size()) throw Error(ErrorKind::dimension_mismatch, "times and flags differ in length");
  std::vector<double> u(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) s += gehan_kernel(times[i], censor[i], times[j], censor[j]);
    u[i] = s;
  }
  return u;
}

/// Permutation variance of Gehan's statistic under equal survival.
inline double gehan_variance(std::span<const double> pooled_times, std::span<const int> pooled_censor,
                             std::size_t n1, std::size_t n2) {
  if (pooled_times.size() != n1 + n2) throw Error(ErrorKind::dimension_mismatch, "pooled sample size is not n1 + n2");
  const auto u = gehan_pooled_scores(pooled_times, pooled_censor);
  CompensatedSum ss;
  for (double x : u) ss.add(x * x);
  const double n = static_cast<double>(n1 + n2);
  return static_cast<double>(n1) * static_cast<double>(n2) / (n * (n - 1.0)) * ss.value();
}

inline double gehan_variance(const TwoSampleData& data) {
  if (!data.censored()) throw Error(ErrorKind::missing_censor_flags, "Gehan variance needs censor flags");
  std::vector<double> t;
  std::vector<int> c;
  for (std::size_t i = 0; i < data.n1(); ++i) t.push_back(data.group1(i, 0));
  for (std::size_t j = 0; j < data.n2(); ++j) t.push_back(data.group2(j, 0));
  c.insert(c.end(), data.censor1->begin(), data.censor1->end());
  c.insert(c.end(), data.censor2->begin(), data.censor2->end());
  return gehan_variance(t, c, data.n1(), data.n2());
}

/// Mean outer product of centered kernel values.
inline Matrix h_hat(const KernelMatrix& km, std::span<const double> theta0) {
  const std::size_t q = km.dim();
  if (theta0.size() != q) throw Error(ErrorKind::dimension_mismatch, "null value has wrong dimension");
  std::vector<CompensatedSum> acc(q * q);
  std::vector<double> d(q);
  for (std::size_t i = 0; i < km.rows(); ++i)
    for (std::size_t j = 0; j < km.cols(); ++j) {
      const auto v = km.at(i, j);
      for (std::size_t k = 0; k < q; ++k) d[k] = v[k] - theta0[k];
      for (std::size_t a = 0; a < q; ++a)
        for (std::size_t b = a; b < q; ++b) acc[a * q + b].add(d[a] * d[b]);
    }
  Matrix h(q, q);
  const double n = static_cast<double>(km.count());
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = a; b < q; ++b) h(a, b) = h(b, a) = acc[a * q + b].value() / n;
  return h;
}

/// Mixture weights c_k: eigenvalues of H^{-1} Sigma, descending.
struct EigenWeights {
  std::vector<double> weights;
};

/// Generalized eigenvalues of Sigma v = c H v through the Cholesky factor of
/// H and a symmetric eigensolve of L^{-1} Sigma L^{-T}.
inline EigenWeights eigen_weights(const Matrix& h, const Matrix& sigma, double max_condition = 1e12) {
  if (!h.square() || !sigma.square() || h.rows() != sigma.rows())
    throw Error(ErrorKind::dimension_mismatch, "H and Sigma must be square of equal size");
  if (!is_symmetric(h) || !is_symmetric(sigma))
    throw Error(ErrorKind::invalid_argument, "H and Sigma must be symmetric");
  const std::size_t q = h.rows();
  const auto h_eig = symmetric_eigen(h);
  const double hmax = h_eig.values.front(), hmin = h_eig.values.back();
  if (!(hmin > 0.0) || hmax / hmin > max_condition)
    throw Error(ErrorKind::singular_h, "H is singular or ill-conditioned");
  const auto l = cholesky(h, 0.0);
  if (!l) throw Error(ErrorKind::singular_h, "Cholesky factorization of H failed");

  // C = L^{-1} Sigma L^{-T}, built column by column.
  Matrix tmp(q, q);
  for (std::size_t j = 0; j < q; ++j) {
    std::vector<double> col(q);
    for (std::size_t i = 0; i < q; ++i) col[i] = sigma(i, j);
    const auto y = forward_substitute(*l, col);
    for (std::size_t i = 0; i < q; ++i) tmp(i, j) = y[i];
  }
  Matrix c(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    std::vector<double> row(q);
    for (std::size_t j = 0; j < q; ++j) row[j] = tmp(i, j);
    const auto y = forward_substitute(*l, row);
    for (std::size_t j = 0; j < q; ++j) c(i, j) = y[j];
  }
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = i + 1; j < q; ++j) c(i, j) = c(j, i) = 0.5 * (c(i, j) + c(j, i));

  auto values = symmetric_eigen(c).values;
  const double scale = std::max(std::abs(c.trace()), 1e-300);
  for (double& v : values) {
    if (v < -1e-10 * scale) throw Error(ErrorKind::invalid_argument, "Sigma is not positive semidefinite");
    v = std::max(v, 0.0);
  }
  return {values};
}

}  // namespace uel
