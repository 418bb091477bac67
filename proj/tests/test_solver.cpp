#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "prox_oracle.hpp"
#include "spice/linalg.hpp"
#include "spice/solver.hpp"
#include "test_helpers.hpp"

using namespace spice;
using Catch::Approx;

namespace {

SymmetricMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  const int p = static_cast<int>(rows.size());
  SymmetricMatrix m(p);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) m.set(i, j, rows[i][j]);
  return m;
}

SolverState make_state(const CholeskyFactor& T, const PenaltySpec& pen) {
  SolverState st;
  st.T = T;
  st.omega = T.gram();
  set_anchor(st, pen);
  return st;
}

prox_oracle::Dense to_dense(const SymmetricMatrix& m) {
  prox_oracle::Dense d(m.dim(), std::vector<double>(m.dim()));
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) d[i][j] = m(i, j);
  return d;
}

}  // namespace

TEST_CASE("objective_value closed forms") {
  Rng rng(21);
  const SymmetricMatrix s = helpers::random_pd(4, rng);
  PenaltySpec pen;
  pen.lambda = 0.7;

  double trace = 0.0;
  for (int i = 0; i < 4; ++i) trace += s(i, i);
  CHECK(objective_value(s, SymmetricMatrix::identity(4), pen) == Approx(trace));

  // p = 1: 0.5 * 2 - log 0.5 = 1 + log 2
  SymmetricMatrix s1(1), o1(1);
  s1.set(0, 0, 2.0);
  o1.set(0, 0, 0.5);
  CHECK(objective_value(s1, o1, pen) == Approx(1.0 + std::log(2.0)).epsilon(1e-12));

  // lambda = 0 at omega = s^-1: p + log|s|
  PenaltySpec zero;
  const SymmetricMatrix s2 = helpers::random_pd(2, rng);
  CHECK(objective_value(s2, invert_pd(s2), zero) ==
        Approx(2.0 + log_det_pd(s2)).epsilon(1e-10));
}

TEST_CASE("initialize_factor strategies") {
  const SymmetricMatrix id = SymmetricMatrix::identity(3);
  for (auto strat : {InitStrategy::inverse_sample, InitStrategy::univariate_regression,
                     InitStrategy::diagonal}) {
    const CholeskyFactor T = initialize_factor(id, strat);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= i; ++j)
        CHECK(T(i, j) == Approx(i == j ? 1.0 : 0.0).margin(1e-14));
  }

  const CholeskyFactor d =
      initialize_factor(SymmetricMatrix::diagonal({4, 9}), InitStrategy::diagonal);
  CHECK(d(0, 0) == Approx(0.5));
  CHECK(d(1, 1) == Approx(1.0 / 3.0));

  const CholeskyFactor u = initialize_factor(from_rows({{1.0, 0.5}, {0.5, 1.0}}),
                                             InitStrategy::univariate_regression);
  CHECK(u(0, 0) == Approx(1.0));
  CHECK(u(1, 0) == Approx(-0.5));
  CHECK(u(1, 1) == Approx(1.0));

  Rng rng(9);
  const SymmetricMatrix m = helpers::random_pd(5, rng);
  const CholeskyFactor inv = initialize_factor(m, InitStrategy::inverse_sample);
  CHECK(helpers::rel_frobenius(inv.gram(), invert_pd(m)) < 1e-9);

  SymmetricMatrix bad(2);
  bad.set(0, 0, 1.0);  // second variance is zero
  CHECK_THROWS_AS(initialize_factor(bad, InitStrategy::diagonal), NonPositiveVariance);
}

TEST_CASE("update_offdiagonal closed forms") {
  const SymmetricMatrix s = from_rows({{1.0, 0.5}, {0.5, 1.0}});

  SECTION("lambda = 0: pure likelihood step") {
    PenaltySpec pen;
    SolverState st = make_state(CholeskyFactor::identity(2), pen);
    CHECK(update_offdiagonal(st, 1, 0, s, pen) == Approx(-0.5));
  }

  SECTION("epsilon-perturbed penalty shrinks the step") {
    PenaltySpec pen;
    pen.lambda = 1.0;
    pen.q = 1.0;
    pen.epsilon = 1e-8;
    SolverState st = make_state(CholeskyFactor::identity(2), pen);
    const double expected = -0.5 / (1.0 + 1e8);
    CHECK(update_offdiagonal(st, 1, 0, s, pen) == Approx(expected).epsilon(1e-10));
  }

  SECTION("index validation") {
    PenaltySpec pen;
    SolverState st = make_state(CholeskyFactor::identity(2), pen);
    CHECK_THROWS_AS(update_offdiagonal(st, 0, 0, s, pen), IndexOutOfRange);
    CHECK_THROWS_AS(update_offdiagonal(st, 2, 0, s, pen), IndexOutOfRange);
  }
}

TEST_CASE("update_diagonal closed forms") {
  PenaltySpec pen;

  SECTION("decoupled coordinate: 1/sqrt(s_cc)") {
    SolverState st = make_state(CholeskyFactor::identity(2), pen);
    const SymmetricMatrix s = SymmetricMatrix::diagonal({4.0, 1.0});
    CHECK(update_diagonal(st, 0, s, pen) == Approx(0.5));
    CHECK(update_diagonal(st, 1, s, pen) == Approx(1.0));
  }

  SECTION("quadratic formula with a coupled row") {
    CholeskyFactor T = CholeskyFactor::identity(2);
    T.set(1, 0, -0.5);
    SolverState st = make_state(T, pen);
    const SymmetricMatrix s = from_rows({{1.0, 0.5}, {0.5, 1.0}});
    // b = -0.25, a = 1 -> u+ = (0.25 + sqrt(4.0625)) / 2
    const double expected = (0.25 + std::sqrt(4.0625)) / 2.0;
    CHECK(update_diagonal(st, 1, s, pen) == Approx(expected).epsilon(1e-12));
    CHECK(expected == Approx(1.1328).margin(5e-5));
  }
}

TEST_CASE("update_omega_fast") {
  PenaltySpec pen;

  SECTION("no-op when value unchanged") {
    SolverState st = make_state(CholeskyFactor::identity(2), pen);
    update_omega_fast(st, 1, 0, 0.0, 0.0);
    CHECK(st.omega(0, 0) == 1.0);
    CHECK(st.omega(0, 1) == 0.0);
  }

  SECTION("p = 2 hand example") {
    SolverState st = make_state(CholeskyFactor::identity(2), pen);
    st.T.set(1, 0, 0.3);
    update_omega_fast(st, 1, 0, 0.3, 0.0);
    CHECK(st.omega(1, 0) == Approx(0.3));
    CHECK(st.omega(0, 0) == Approx(1.09));
    CHECK(st.omega(1, 1) == Approx(1.0));
  }

  SECTION("stays consistent with T^T T across random updates") {
    Rng rng(31);
    const int p = 6;
    SolverState st = make_state(gram_factor(helpers::random_pd(p, rng)), pen);
    for (int rep = 0; rep < 100; ++rep) {
      const int c = static_cast<int>(rng.uniform_below(p));
      const int l = c + static_cast<int>(rng.uniform_below(p - c));
      const double t_old = st.T(l, c);
      double t_new = t_old + 0.1 * rng.normal();
      if (l == c && t_new <= 0.05) t_new = 0.05;  // keep the diagonal positive
      st.T.set(l, c, t_new);
      update_omega_fast(st, l, c, t_new, t_old);
      // brute-force recomputation oracle
      const SymmetricMatrix full = st.T.gram();
      CHECK(frobenius_distance(st.omega, full) < 1e-10 * frobenius_norm(full));
    }
  }
}

TEST_CASE("threshold_small_entries") {
  SymmetricMatrix m = SymmetricMatrix::identity(3);
  m.set(0, 1, 1e-9);
  m.set(0, 2, 0.5);
  m.set(2, 2, 1e-9);  // diagonal is exempt
  auto [out, zeros] = threshold_small_entries(m, 1e-8);
  CHECK(out(0, 1) == 0.0);
  CHECK(zeros(0, 1));
  CHECK(zeros(1, 0));
  CHECK(out(0, 2) == 0.5);
  CHECK_FALSE(zeros(0, 2));
  CHECK(out(2, 2) == 1e-9);
  CHECK_FALSE(zeros(2, 2));

  // nothing below threshold: unchanged
  auto [same, none] = threshold_small_entries(m, 1e-12);
  CHECK(frobenius_distance(same, m) == 0.0);
  CHECK_FALSE(none(0, 1));
}

TEST_CASE("solve with lambda = 0 recovers the inverse") {
  Rng rng(101);
  for (auto strat : {InitStrategy::inverse_sample, InitStrategy::univariate_regression,
                     InitStrategy::diagonal}) {
    const SymmetricMatrix s = helpers::random_pd(5, rng);
    PenaltySpec pen;
    SolverConfig cfg;
    cfg.init_strategy = strat;
    const EstimateReport rep = solve(s, pen, cfg);
    CHECK(rep.converged);
    CHECK(helpers::rel_frobenius(rep.omega_hat, invert_pd(s)) < 1e-6);
  }
}

TEST_CASE("solve stationarity at lambda = 0: omega_hat inverts sigma_hat") {
  Rng rng(102);
  for (int p : {2, 5, 10}) {
    const SymmetricMatrix s = helpers::random_pd(p, rng);
    PenaltySpec pen;
    SolverConfig cfg;
    cfg.init_strategy = InitStrategy::diagonal;
    cfg.outer_tol = 1e-10;
    cfg.inner_tol = 1e-9;
    const EstimateReport rep = solve(s, pen, cfg);
    const SymmetricMatrix sigma_back = invert_pd(rep.omega_hat);
    CHECK(frobenius_distance(sigma_back, s) / frobenius_norm(s) < 1e-5);
  }
}

TEST_CASE("solve with huge lambda zeroes every off-diagonal") {
  Rng rng(103);
  const SymmetricMatrix s = helpers::random_pd(4, rng);
  PenaltySpec pen;
  pen.lambda = 1e6;
  SolverConfig cfg;
  cfg.init_strategy = InitStrategy::univariate_regression;
  const EstimateReport rep = solve(s, pen, cfg);
  for (int i = 0; i < 4; ++i) {
    CHECK(rep.omega_hat(i, i) == Approx(1.0 / s(i, i)).epsilon(1e-4));
    for (int j = 0; j < 4; ++j)
      if (i != j) {
        CHECK(rep.omega_hat(i, j) == 0.0);
        CHECK(rep.zero_pattern(i, j));
      }
  }
}

TEST_CASE("solve descent, positive definiteness, convergence flag") {
  Rng rng(104);
  for (int rep_i = 0; rep_i < 5; ++rep_i) {
    const SymmetricMatrix s = helpers::random_correlation(6, rng);
    PenaltySpec pen;
    pen.lambda = 0.15;
    SolverConfig cfg;
    cfg.init_strategy = InitStrategy::univariate_regression;
    const EstimateReport rep = solve(s, pen, cfg);
    REQUIRE(rep.objective_trace.size() >= 2);
    for (std::size_t i = 0; i + 1 < rep.objective_trace.size(); ++i)
      CHECK(rep.objective_trace[i + 1] <=
            rep.objective_trace[i] + 1e-9 * (1.0 + std::abs(rep.objective_trace[i])));
    const EigenBounds b = extreme_eigenvalues(rep.omega_hat, 1e-9);
    CHECK(b.min_eig > 0.0);
    // zero pattern symmetric with a clean diagonal
    for (int i = 0; i < 6; ++i) {
      CHECK_FALSE(rep.zero_pattern(i, i));
      for (int j = 0; j < 6; ++j) CHECK(rep.zero_pattern(i, j) == rep.zero_pattern(j, i));
    }
  }
}

TEST_CASE("solve with q = 2 needs no extra outer refreshes") {
  Rng rng(105);
  for (int p : {4, 10}) {
    const SymmetricMatrix s = helpers::random_correlation(p, rng);
    PenaltySpec pen;
    pen.lambda = 0.3;
    pen.q = 2.0;
    SolverConfig cfg;
    cfg.init_strategy = InitStrategy::univariate_regression;
    const EstimateReport rep = solve(s, pen, cfg);
    CHECK(rep.converged);
    CHECK(rep.outer_iters <= 3);
  }
}

TEST_CASE("solve matches the proximal-gradient oracle at q = 1") {
  Rng rng(106);
  const SymmetricMatrix s = helpers::random_correlation(3, rng);
  PenaltySpec pen;
  pen.lambda = 0.2;
  SolverConfig cfg;
  cfg.init_strategy = InitStrategy::univariate_regression;
  cfg.inner_tol = 1e-9;
  cfg.outer_tol = 1e-13;
  cfg.outer_move_tol = 1e-8;
  cfg.max_inner_sweeps = 500;
  cfg.max_outer_iters = 20000;
  const EstimateReport rep = solve(s, pen, cfg);

  const prox_oracle::Dense oracle = prox_oracle::minimize(to_dense(s), pen.lambda);
  const double f_solver = objective_value(s, rep.omega_hat, pen);
  const double f_oracle = prox_oracle::objective(oracle, to_dense(s), pen.lambda);
  CHECK(std::abs(f_solver - f_oracle) < 1e-4);
}

TEST_CASE("solve rejects non-positive variances up front") {
  SymmetricMatrix s(2);
  s.set(0, 0, 1.0);
  s.set(1, 1, 0.0);
  PenaltySpec pen;
  SolverConfig cfg;
  CHECK_THROWS_AS(solve(s, pen, cfg), NonPositiveVariance);
}

TEST_CASE("solve reports non-convergence instead of throwing") {
  Rng rng(107);
  const SymmetricMatrix s = helpers::random_pd(8, rng, 0.3);
  PenaltySpec pen;  // lambda = 0: the objective keeps falling toward the MLE
  SolverConfig cfg;
  cfg.init_strategy = InitStrategy::diagonal;
  cfg.max_outer_iters = 1;
  cfg.max_inner_sweeps = 1;
  cfg.outer_tol = 1e-16;
  const EstimateReport rep = solve(s, pen, cfg);
  CHECK_FALSE(rep.converged);
  CHECK(rep.outer_iters == 1);
}
