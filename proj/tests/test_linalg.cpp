#include <gtest/gtest.h>

#include <cmath>

#include "uel/linalg.hpp"
#include "uel/random.hpp"

namespace {

uel::Matrix random_spd(std::size_t n, uel::Rng& rng) {
  uel::Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.normal();
  auto s = a * a.transposed();
  for (std::size_t i = 0; i < n; ++i) s(i, i) += 0.1;
  return s;
}

}  // namespace

TEST(Cholesky, ReconstructsTheMatrix) {
  uel::Rng rng(3);
  for (std::size_t n : {1u, 2u, 3u, 6u}) {
    const auto a = random_spd(n, rng);
    const auto l = uel::cholesky(a);
    ASSERT_TRUE(l.has_value());
    const auto back = *l * l->transposed();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_NEAR(back(i, j), a(i, j), 1e-12 * (1.0 + std::abs(a(i, j))));
        if (j > i) {
          EXPECT_EQ((*l)(i, j), 0.0);
        }
      }
  }
}

TEST(Cholesky, RejectsIndefiniteAndSingular) {
  EXPECT_FALSE(uel::cholesky(uel::Matrix{{2.5, 2.5}, {2.5, 1.0}}).has_value());
  EXPECT_FALSE(uel::cholesky(uel::Matrix{{1.0, 1.0}, {1.0, 1.0}}).has_value());
  EXPECT_TRUE(uel::cholesky(uel::Matrix{{4.0, 1.5}, {1.5, 2.25}}).has_value());
}

TEST(Cholesky, SolveGivesResidualNearZero) {
  uel::Rng rng(9);
  const auto a = random_spd(4, rng);
  const std::vector<double> b{1.0, -2.0, 0.5, 3.0};
  const auto x = uel::cholesky_solve(*uel::cholesky(a), b);
  const auto ax = a * x;
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(ax[i], b[i], 1e-10);
}

TEST(SymmetricEigen, KnownTwoByTwo) {
  // Eigenvalues of [[2,1],[1,2]] are 3 and 1.
  const auto e = uel::symmetric_eigen(uel::Matrix{{2.0, 1.0}, {1.0, 2.0}});
  ASSERT_EQ(e.values.size(), 2u);
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
}

TEST(SymmetricEigen, EigenpairsSatisfyDefinitionAndAreOrthonormal) {
  uel::Rng rng(21);
  const auto a = random_spd(5, rng);
  const auto e = uel::symmetric_eigen(a);
  for (std::size_t k = 0; k < 5; ++k) {
    if (k > 0) {
      EXPECT_GE(e.values[k - 1], e.values[k]);
    }
    std::vector<double> v(5);
    for (std::size_t i = 0; i < 5; ++i) v[i] = e.vectors(i, k);
    const auto av = a * v;
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(av[i], e.values[k] * v[i], 1e-10);
    for (std::size_t l = 0; l < 5; ++l) {
      double d = 0;
      for (std::size_t i = 0; i < 5; ++i) d += e.vectors(i, k) * e.vectors(i, l);
      EXPECT_NEAR(d, k == l ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(MatrixChecks, SymmetryAndSemidefiniteness) {
  EXPECT_TRUE(uel::is_symmetric(uel::Matrix{{1, 2}, {2, 1}}));
  EXPECT_FALSE(uel::is_symmetric(uel::Matrix{{1, 2}, {2.1, 1}}));
  EXPECT_TRUE(uel::is_positive_semidefinite(uel::Matrix{{1, 1}, {1, 1}}));
  EXPECT_FALSE(uel::is_positive_semidefinite(uel::Matrix{{2.5, 2.5}, {2.5, 1.0}}));
}
