#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uel/el_core.hpp"
#include "uel/error.hpp"
#include "uel/numeric.hpp"

namespace uel {

/// How an exact tie x == y is scored by the indicator I(x < y).
enum class TiePolicy { strict, half };

inline std::string_view to_string(TiePolicy p) { return p == TiePolicy::strict ? "strict" : "half"; }

enum class KernelId { wmw, auc_diff, gehan, mv_wmw, custom };

inline std::string_view to_string(KernelId id) {
  switch (id) {
    case KernelId::wmw: return "wmw";
    case KernelId::auc_diff: return "auc_diff";
    case KernelId::gehan: return "gehan";
    case KernelId::mv_wmw: return "mv_wmw";
    case KernelId::custom: return "custom";
  }
  return "unknown";
}

/// n observation units of common dimension p, row-major.
class Sample {
 public:
  Sample() = default;
  Sample(std::size_t dim, std::vector<double> values) : dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw Error(ErrorKind::invalid_argument, "sample dimension must be positive");
    if (values_.size() % dim_ != 0)
      throw Error(ErrorKind::dimension_mismatch, "sample values are not a whole number of rows");
  }

  static Sample univariate(std::vector<double> values) { return Sample(1, std::move(values)); }

  static Sample from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Sample(1, {});
    const std::size_t p = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * p);
    for (const auto& r : rows) {
      if (r.size() != p) throw Error(ErrorKind::dimension_mismatch, "rows of unequal dimension");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return Sample(p, std::move(flat));
  }

  std::size_t size() const { return dim_ ? values_.size() / dim_ : 0; }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * dim_, dim_);
  }
  double operator()(std::size_t i, std::size_t k) const { return values_[i * dim_ + k]; }
  std::vector<double> column(std::size_t k) const {
    std::vector<double> c(size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = (*this)(i, k);
    return c;
  }
  /// Row-wise inner product with a contrast vector.
  std::vector<double> project(std::span<const double> contrast) const {
    if (contrast.size() != dim_) throw Error(ErrorKind::dimension_mismatch, "contrast length differs from p");
    std::vector<double> c(size(), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t k = 0; k < dim_; ++k) c[i] += contrast[k] * (*this)(i, k);
    return c;
  }
  std::span<const double> data() const { return values_; }

 private:
  std::size_t dim_ = 1;
  std::vector<double> values_;
};

/// Two independent groups; censor flags use 1 = censored, 0 = event observed.
struct TwoSampleData {
  Sample group1;
  Sample group2;
  std::optional<std::vector<int>> censor1;
  std::optional<std::vector<int>> censor2;

  std::size_t n1() const { return group1.size(); }
  std::size_t n2() const { return group2.size(); }
  bool censored() const { return censor1.has_value() && censor2.has_value(); }

  void validate() const {
    if (n1() < 2 || n2() < 2) throw Error(ErrorKind::invalid_argument, "each group needs at least 2 observations");
    if (group1.dim() != group2.dim()) throw Error(ErrorKind::dimension_mismatch, "groups differ in dimension");
    for (double v : group1.data())
      if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "non-finite observation in group 1");
    for (double v : group2.data())
      if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "non-finite observation in group 2");
    if (censor1.has_value() != censor2.has_value())
      throw Error(ErrorKind::missing_censor_flags, "censor flags given for only one group");
    if (censor1) {
      if (censor1->size() != n1() || censor2->size() != n2())
        throw Error(ErrorKind::dimension_mismatch, "censor flags do not align with observations");
      for (int c : *censor1)
        if (c != 0 && c != 1) throw Error(ErrorKind::invalid_argument, "censor flag must be 0 or 1");
      for (int c : *censor2)
        if (c != 0 && c != 1) throw Error(ErrorKind::invalid_argument, "censor flag must be 0 or 1");
    }
  }
};

// --- scalar kernels ---------------------------------------------------------

/// I(x < y), ties scored 0 (strict) or 1/2 (half).
inline double wmw_kernel(double x, double y, TiePolicy policy = TiePolicy::strict) {
  if (x < y) return 1.0;
  if (x > y) return 0.0;
  return policy == TiePolicy::half ? 0.5 : 0.0;
}

/// Difference of two indicator kernels on already-contrasted 2-vectors.
inline double auc_diff_kernel(std::span<const double> x, std::span<const double> y,
                              TiePolicy policy = TiePolicy::strict) {
  if (x.size() != 2 || y.size() != 2) throw Error(ErrorKind::dimension_mismatch, "auc_diff_kernel needs 2-vectors");
  return wmw_kernel(x[0], y[0], policy) - wmw_kernel(x[1], y[1], policy);
}

/// Gehan's score: +1 when subject i definitely outlives subject j, -1 in the
/// mirror case, 0 when the ordering is not determined by the data.
inline double gehan_kernel(double t_i, int c_i, double t_j, int c_j) {
  const bool dead_i = c_i == 0, dead_j = c_j == 0;
  if (dead_j && ((dead_i && t_i > t_j) || (!dead_i && t_i >= t_j))) return 1.0;
  if (dead_i && ((dead_j && t_j > t_i) || (!dead_j && t_j >= t_i))) return -1.0;
  return 0.0;
}

inline std::vector<double> mv_wmw_kernel(std::span<const double> x, std::span<const double> y,
                                         TiePolicy policy = TiePolicy::strict) {
  if (x.size() != y.size()) throw Error(ErrorKind::dimension_mismatch, "mv_wmw_kernel: dimensions differ");
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = wmw_kernel(x[k], y[k], policy);
  return out;
}

// --- kernel matrices --------------------------------------------------------

/// Kernel values over the index set: rows index group-1 subsets, columns
/// group-2 subsets, each entry a q-vector. For the named kernels
/// (m1 = m2 = 1) rows = n1 and cols = n2.
class KernelMatrix {
 public:
  KernelMatrix(std::size_t rows, std::size_t cols, std::size_t q, std::vector<double> values,
               KernelId id, TiePolicy ties)
      : rows_(rows), cols_(cols), q_(q), values_(std::move(values)), id_(id), ties_(ties) {
    if (rows_ == 0 || cols_ == 0 || q_ == 0) throw Error(ErrorKind::invalid_argument, "empty kernel matrix");
    if (values_.size() != rows_ * cols_ * q_)
      throw Error(ErrorKind::dimension_mismatch, "kernel matrix storage has wrong size");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t dim() const { return q_; }
  std::size_t count() const { return rows_ * cols_; }
  KernelId id() const { return id_; }
  TiePolicy ties() const { return ties_; }

  std::span<const double> at(std::size_t i, std::size_t j) const {
    return std::span<const double>(values_).subspan((i * cols_ + j) * q_, q_);
  }
  double scalar(std::size_t i, std::size_t j) const { return values_[(i * cols_ + j) * q_]; }
  std::span<const double> data() const { return values_; }

  /// Component k as a scalar kernel matrix.
  KernelMatrix component(std::size_t k) const {
    if (k >= q_) throw Error(ErrorKind::dimension_mismatch, "component index out of range");
    std::vector<double> v(count());
    for (std::size_t idx = 0; idx < v.size(); ++idx) v[idx] = values_[idx * q_ + k];
    return KernelMatrix(rows_, cols_, 1, std::move(v), id_ == KernelId::mv_wmw ? KernelId::wmw : id_, ties_);
  }

  /// h - theta0 for every index set.
  CenteredKernelValues centered(std::span<const double> theta0) const {
    if (theta0.size() != q_) throw Error(ErrorKind::dimension_mismatch, "null value has wrong dimension");
    std::vector<double> v(values_);
    for (std::size_t idx = 0; idx < v.size(); ++idx) v[idx] -= theta0[idx % q_];
    return CenteredKernelValues(std::move(v), q_);
  }
  CenteredKernelValues centered(double theta0) const { return centered(std::span<const double>(&theta0, 1)); }

 private:
  std::size_t rows_, cols_, q_;
  std::vector<double> values_;
  KernelId id_;
  TiePolicy ties_;
};

inline KernelMatrix wmw_matrix(std::span<const double> x, std::span<const double> y,
                               TiePolicy policy = TiePolicy::strict) {
  std::vector<double> v;
  v.reserve(x.size() * y.size());
  for (double xi : x)
    for (double yj : y) v.push_back(wmw_kernel(xi, yj, policy));
  return KernelMatrix(x.size(), y.size(), 1, std::move(v), KernelId::wmw, policy);
}

/// Contrast vectors l1..l4 turning p-variate observations into the pair of
/// compared scalars (l1'X vs l2'Y) and (l3'X vs l4'Y).
struct AucContrasts {
  std::vector<double> l1, l2, l3, l4;

  static AucContrasts coordinates() { return {{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}}; }
};

/// Marker k (k = 0, 1) of a paired design as scalar group-1/group-2 values.
struct MarkerPair {
  std::vector<double> x1, y1, x2, y2;
};

inline MarkerPair contrast_markers(const Sample& x, const Sample& y, const AucContrasts& c) {
  return {x.project(c.l1), y.project(c.l2), x.project(c.l3), y.project(c.l4)};
}

inline KernelMatrix auc_diff_matrix(const MarkerPair& m, TiePolicy policy = TiePolicy::strict) {
  if (m.x1.size() != m.x2.size() || m.y1.size() != m.y2.size())
    throw Error(ErrorKind::dimension_mismatch, "markers must come from the same subjects");
  std::vector<double> v;
  v.reserve(m.x1.size() * m.y1.size());
  for (std::size_t i = 0; i < m.x1.size(); ++i)
    for (std::size_t j = 0; j < m.y1.size(); ++j)
      v.push_back(wmw_kernel(m.x1[i], m.y1[j], policy) - wmw_kernel(m.x2[i], m.y2[j], policy));
  return KernelMatrix(m.x1.size(), m.y1.size(), 1, std::move(v), KernelId::auc_diff, policy);
}

inline KernelMatrix auc_diff_matrix(const Sample& x, const Sample& y, TiePolicy policy = TiePolicy::strict,
                                    const AucContrasts& contrasts = AucContrasts::coordinates()) {
  return auc_diff_matrix(contrast_markers(x, y, contrasts), policy);
}

inline KernelMatrix gehan_matrix(const TwoSampleData& data) {
  if (!data.censored()) throw Error(ErrorKind::missing_censor_flags, "Gehan kernel needs censor flags");
  if (data.group1.dim() != 1 || data.group2.dim() != 1)
    throw Error(ErrorKind::dimension_mismatch, "survival times must be univariate");
  const auto& c1 = *data.censor1;
  const auto& c2 = *data.censor2;
  std::vector<double> v;
  v.reserve(data.n1() * data.n2());
  for (std::size_t i = 0; i < data.n1(); ++i)
    for (std::size_t j = 0; j < data.n2(); ++j)
      v.push_back(gehan_kernel(data.group1(i, 0), c1[i], data.group2(j, 0), c2[j]));
  return KernelMatrix(data.n1(), data.n2(), 1, std::move(v), KernelId::gehan, TiePolicy::strict);
}

inline KernelMatrix mv_wmw_matrix(const Sample& x, const Sample& y, TiePolicy policy = TiePolicy::strict) {
  if (x.dim() != y.dim()) throw Error(ErrorKind::dimension_mismatch, "mv_wmw: groups differ in dimension");
  const std::size_t p = x.dim();
  std::vector<double> v;
  v.reserve(x.size() * y.size() * p);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      for (std::size_t k = 0; k < p; ++k) v.push_back(wmw_kernel(x(i, k), y(j, k), policy));
  return KernelMatrix(x.size(), y.size(), p, std::move(v), KernelId::mv_wmw, policy);
}

// --- generic degree-(m1, m2) engine -----------------------------------------

/// Calls fn(indices) for every strictly increasing m-subset of {0..n-1},
/// in lexicographic order.
inline void for_each_combination(std::size_t n, std::size_t m,
                                 const std::function<void(std::span<const std::size_t>)>& fn) {
  if (m == 0 || m > n) return;
  std::vector<std::size_t> idx(m);
  for (std::size_t k = 0; k < m; ++k) idx[k] = k;
  while (true) {
    fn(idx);
    std::size_t k = m;
    while (k > 0 && idx[k - 1] == n - m + (k - 1)) --k;
    if (k == 0) return;
    ++idx[k - 1];
    for (std::size_t r = k; r < m; ++r) idx[r] = idx[r - 1] + 1;
  }
}

inline std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Evaluates a kernel of degree (m1, m2) with q-dimensional output over all
/// index sets. `h` receives the selected rows of each group and writes q values.
template <typename Kernel>
KernelMatrix evaluate_kernel(const Sample& x, const Sample& y, std::size_t m1, std::size_t m2, std::size_t q,
                             Kernel&& h) {
  if (m1 == 0 || m2 == 0 || m1 > x.size() || m2 > y.size())
    throw Error(ErrorKind::invalid_argument, "kernel degree exceeds sample size");
  std::vector<std::vector<std::size_t>> ysets;
  for_each_combination(y.size(), m2, [&](std::span<const std::size_t> s) { ysets.emplace_back(s.begin(), s.end()); });
  std::vector<double> values;
  values.reserve(binomial(x.size(), m1) * ysets.size() * q);
  std::vector<double> out(q);
  for_each_combination(x.size(), m1, [&](std::span<const std::size_t> xs) {
    for (const auto& ys : ysets) {
      h(x, xs, y, std::span<const std::size_t>(ys), std::span<double>(out));
      values.insert(values.end(), out.begin(), out.end());
    }
  });
  return KernelMatrix(binomial(x.size(), m1), ysets.size(), q, std::move(values), KernelId::custom,
                      TiePolicy::strict);
}

// --- estimators -------------------------------------------------------------

/// Mean kernel value over all index sets.
inline std::vector<double> u_statistic(const KernelMatrix& km) {
  const std::size_t q = km.dim();
  std::vector<CompensatedSum> s(q);
  const auto v = km.data();
  for (std::size_t idx = 0; idx < v.size(); ++idx) s[idx % q].add(v[idx]);
  std::vector<double> out(q);
  for (std::size_t k = 0; k < q; ++k) out[k] = s[k].value() / static_cast<double>(km.count());
  return out;
}

/// Raw sum of Gehan scores over the cross-group pairs (not averaged).
inline double gehan_statistic(const TwoSampleData& data) {
  const auto km = gehan_matrix(data);
  return compensated_sum(km.data());
}

}  // namespace uel
