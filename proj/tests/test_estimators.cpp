#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spice/estimators.hpp"
#include "spice/simulation.hpp"
#include "spice/linalg.hpp"
#include "spice/tuning.hpp"
#include "test_helpers.hpp"

using namespace spice;
using Catch::Approx;

namespace {

DataMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  DataMatrix d;
  d.values = Matrix(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[0].size(); ++j)
      d.values(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return d;
}

// four points whose sample covariance (divisor n) is exactly the identity
DataMatrix unit_cov_data() {
  return from_rows({{1, 1}, {-1, 1}, {1, -1}, {-1, -1}});
}

DataMatrix gaussian_noise(int n, int p, Rng& rng) {
  DataMatrix d;
  d.values = Matrix(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) d.values(i, j) = rng.normal();
  return d;
}

}  // namespace

TEST_CASE("sample_covariance closed forms") {
  const SymmetricMatrix two = sample_covariance(from_rows({{0, 0}, {2, 0}}));
  CHECK(two(0, 0) == Approx(1.0));
  CHECK(two(0, 1) == Approx(0.0).margin(1e-15));
  CHECK(two(1, 1) == Approx(0.0).margin(1e-15));

  // constant column gives a zero row/column
  const SymmetricMatrix c = sample_covariance(from_rows({{1, 3}, {2, 3}, {0, 3}}));
  CHECK(c(1, 1) == 0.0);
  CHECK(c(0, 1) == 0.0);

  // identical rows give the zero matrix
  const SymmetricMatrix z = sample_covariance(from_rows({{1, 2}, {1, 2}}));
  CHECK(frobenius_norm(z) == 0.0);

  CHECK_THROWS_AS(sample_covariance(from_rows({{1, 2}})), TooFewObservations);
}

TEST_CASE("sample_covariance ignores a common shift") {
  Rng rng(61);
  DataMatrix x = gaussian_noise(20, 4, rng);
  DataMatrix shifted = x;
  for (int i = 0; i < x.n(); ++i)
    for (int j = 0; j < x.p(); ++j) shifted.values(i, j) += 7.5 * (j + 1);
  CHECK(frobenius_distance(sample_covariance(x), sample_covariance(shifted)) < 1e-12);
}

TEST_CASE("scale_decompose") {
  const ScaleDecomposition id = scale_decompose(SymmetricMatrix::identity(3));
  for (double w : id.W_diag) CHECK(w == 1.0);
  CHECK(frobenius_distance(id.Gamma_hat, SymmetricMatrix::identity(3)) == 0.0);

  const ScaleDecomposition d = scale_decompose(SymmetricMatrix::diagonal({4, 9}));
  CHECK(d.W_diag[0] == Approx(2.0));
  CHECK(d.W_diag[1] == Approx(3.0));
  CHECK(frobenius_distance(d.Gamma_hat, SymmetricMatrix::identity(2)) == 0.0);

  SymmetricMatrix m(2);
  m.set(0, 0, 4.0);
  m.set(1, 1, 9.0);
  m.set(0, 1, 3.0);
  const ScaleDecomposition g = scale_decompose(m);
  CHECK(g.Gamma_hat(0, 1) == Approx(0.5));
  CHECK(g.Gamma_hat(0, 0) == 1.0);

  CHECK_THROWS_AS(scale_decompose(SymmetricMatrix::diagonal({1, 0})), NonPositiveVariance);
}

TEST_CASE("spice_covariance limits") {
  Rng rng(62);
  const SymmetricMatrix s = helpers::random_pd(3, rng);
  SolverConfig cfg;
  cfg.init_strategy = InitStrategy::inverse_sample;

  PenaltySpec zero;
  CHECK(helpers::rel_frobenius(spice_covariance(s, zero, cfg).omega_hat, invert_pd(s)) <
        1e-6);

  PenaltySpec huge;
  huge.lambda = 1e6;
  const EstimateReport rep = spice_covariance(s, huge, cfg);
  for (int j = 0; j < 3; ++j)
    CHECK(rep.omega_hat(j, j) == Approx(1.0 / s(j, j)).epsilon(1e-4));
}

TEST_CASE("spice_correlation equals the plain fit when sigma_hat is the identity") {
  const DataMatrix x = unit_cov_data();
  PenaltySpec pen;
  pen.lambda = 0.1;
  SolverConfig cfg;
  cfg.init_strategy = InitStrategy::diagonal;
  const EstimateReport corr = spice_correlation(x, pen, cfg);
  const EstimateReport direct = spice_covariance(SymmetricMatrix::identity(2), pen, cfg);
  CHECK(frobenius_distance(corr.omega_hat, direct.omega_hat) < 1e-12);
}

TEST_CASE("spice_correlation with lambda = 0 reproduces the inverse covariance") {
  Rng rng(63);
  const DataMatrix x = gaussian_noise(40, 4, rng);
  PenaltySpec pen;
  SolverConfig cfg;
  cfg.init_strategy = InitStrategy::inverse_sample;
  cfg.inner_tol = 1e-8;
  cfg.outer_tol = 1e-9;
  const EstimateReport rep = spice_correlation(x, pen, cfg);
  const SymmetricMatrix target = invert_pd(sample_covariance(x));
  CHECK(helpers::rel_frobenius(rep.omega_hat, target) < 1e-5);
}

TEST_CASE("spice_correlation zero pattern survives the rescaling") {
  Rng rng(64);
  const DataMatrix x = gaussian_noise(30, 5, rng);
  PenaltySpec pen;
  pen.lambda = 0.4;
  SolverConfig cfg;
  cfg.init_strategy = InitStrategy::inverse_sample;
  const EstimateReport rep = spice_correlation(x, pen, cfg);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j && rep.zero_pattern(i, j)) CHECK(rep.omega_hat(i, j) == 0.0);
}

TEST_CASE("ledoit_wolf: degenerate target, clipping, eigenvalue range") {
  // sample covariance exactly mu * I: returns it unchanged
  const SymmetricMatrix lw_id = ledoit_wolf(unit_cov_data());
  CHECK(frobenius_distance(lw_id, SymmetricMatrix::identity(2)) < 1e-15);

  Rng rng(65);
  for (int rep = 0; rep < 10; ++rep) {
    const DataMatrix x = gaussian_noise(12, 6, rng);
    const SymmetricMatrix s = sample_covariance(x);
    const SymmetricMatrix lw = ledoit_wolf(x);
    // shrinkage stays a convex combination: eigenvalues inside the hull
    double mu = 0.0;
    for (int j = 0; j < 6; ++j) mu += s(j, j);
    mu /= 6.0;
    const EigenBounds sb = extreme_eigenvalues(s, 1e-9);
    const EigenBounds lb = extreme_eigenvalues(lw, 1e-9);
    CHECK(lb.min_eig >= std::min(mu, sb.min_eig) - 1e-7);
    CHECK(lb.max_eig <= std::max(mu, sb.max_eig) + 1e-7);
  }
}

TEST_CASE("ledoit_wolf matches a literal transcription of the formula") {
  Rng rng(66);
  const int n = 50, p = 10;
  const DataMatrix x = gaussian_noise(n, p, rng);

  // brute-force transcription, no shared library helpers
  std::vector<double> mean(p, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) mean[j] += x.values(i, j) / n;
  std::vector<std::vector<double>> y(n, std::vector<double>(p));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) y[i][j] = x.values(i, j) - mean[j];
  std::vector<std::vector<double>> s(p, std::vector<double>(p, 0.0));
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      for (int i = 0; i < n; ++i) s[a][b] += y[i][a] * y[i][b];
      s[a][b] /= n;
    }
  double m = 0.0;
  for (int a = 0; a < p; ++a) m += s[a][a];
  m /= p;
  double d2 = 0.0;
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      const double v = s[a][b] - (a == b ? m : 0.0);
      d2 += v * v;
    }
  d2 /= p;
  double bbar2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) {
        const double v = y[i][a] * y[i][b] - s[a][b];
        acc += v * v;
      }
    bbar2 += acc / p;
  }
  bbar2 /= static_cast<double>(n) * n;
  const double b2 = std::min(bbar2, d2);
  const double a2 = d2 - b2;

  const SymmetricMatrix lw = ledoit_wolf(x);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      const double expected = b2 / d2 * m * (a == b ? 1.0 : 0.0) + a2 / d2 * s[a][b];
      CHECK(lw(a, b) == Approx(expected).margin(1e-10));
    }
}

TEST_CASE("naive_bayes_diagonal") {
  const SymmetricMatrix nb = naive_bayes_diagonal(from_rows({{0, 0}, {2, 0}}));
  CHECK(nb(0, 0) == Approx(1.0));
  CHECK(nb(1, 1) == 0.0);
  CHECK(nb(0, 1) == 0.0);

  const SymmetricMatrix id = naive_bayes_diagonal(unit_cov_data());
  CHECK(frobenius_distance(id, SymmetricMatrix::identity(2)) < 1e-15);
}

TEST_CASE("permutation invariance of the penalized estimates") {
  // structured sparse truths keep the minimizer's coefficients away from
  // the selection boundary, where truncated runs of the quadratic
  // approximation would otherwise disagree between orderings
  Rng rng(67);
  const int p = 6;
  PenaltySpec pen;
  pen.lambda = 0.2;
  SolverConfig cfg;
  cfg.init_strategy = InitStrategy::univariate_regression;
  cfg.inner_tol = 1e-9;
  cfg.outer_tol = 1e-13;
  cfg.outer_move_tol = 1e-8;
  cfg.max_inner_sweeps = 500;
  cfg.max_outer_iters = 20000;

  for (int rep = 0; rep < 3; ++rep) {
    const SymmetricMatrix s = helpers::sparse_truth_covariance(p, 5000, rep, rng);
    std::vector<int> perm(p);
    for (int i = 0; i < p; ++i) perm[i] = i;
    rng.shuffle(perm);

    const EstimateReport base = spice_covariance(s, pen, cfg);
    const EstimateReport permuted = spice_covariance(helpers::permute(s, perm), pen, cfg);
    const SymmetricMatrix expected = helpers::permute(base.omega_hat, perm);
    CHECK(helpers::rel_frobenius(permuted.omega_hat, expected) < 1e-5);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        CHECK(permuted.zero_pattern(i, j) == base.zero_pattern(perm[i], perm[j]));
  }
}

TEST_CASE("permutation invariance of the correlation-based estimate") {
  Rng rng(68);
  const int p = 5;
  ModelSpec spec;
  spec.kind = ModelKind::AR1;
  spec.p = p;
  spec.rho = 0.55;
  const DataMatrix x = sample_mvn(build_model(spec), 5000, 42);
  std::vector<int> perm = {3, 0, 4, 2, 1};
  DataMatrix xp;
  xp.values = Matrix(x.n(), p);
  for (int i = 0; i < x.n(); ++i)
    for (int j = 0; j < p; ++j) xp.values(i, j) = x.values(i, perm[j]);

  PenaltySpec pen;
  pen.lambda = 0.2;
  SolverConfig cfg;
  cfg.init_strategy = InitStrategy::univariate_regression;
  cfg.inner_tol = 1e-9;
  cfg.outer_tol = 1e-13;
  cfg.outer_move_tol = 1e-8;
  cfg.max_inner_sweeps = 500;
  cfg.max_outer_iters = 20000;

  const EstimateReport base = spice_correlation(x, pen, cfg);
  const EstimateReport permuted = spice_correlation(xp, pen, cfg);
  const SymmetricMatrix expected = helpers::permute(base.omega_hat, perm);
  CHECK(helpers::rel_frobenius(permuted.omega_hat, expected) < 1e-5);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      CHECK(permuted.zero_pattern(i, j) == base.zero_pattern(perm[i], perm[j]));
}
