#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "spice/errors.hpp"
#include "spice/linalg.hpp"
#include "spice/matrix.hpp"

namespace spice {

/// Kullback-Leibler loss tr(Sigma Omega_hat) - log|Sigma Omega_hat| - p,
/// evaluated as tr(Sigma Omega_hat) - log|Sigma| - log|Omega_hat| - p with
/// two Cholesky log-determinants (stabler than one log-determinant of the
/// non-symmetric product). Nonnegative; zero iff Omega_hat = Sigma^-1.
inline double kl_loss(const SymmetricMatrix& sigma_true, const SymmetricMatrix& omega_hat) {
  require_same_dim(sigma_true, omega_hat, "kl_loss");
  const int p = sigma_true.dim();
  double trace = 0.0;
  for (int i = 0; i < p; ++i) {
    const double* rs = sigma_true.row(i);
    const double* ro = omega_hat.row(i);
    for (int j = 0; j < p; ++j) trace += rs[j] * ro[j];
  }
  return trace - log_det_pd(sigma_true) - log_det_pd(omega_hat) - p;
}

/// Sparsity-recovery confusion over off-diagonal ordered pairs. A
/// percentage whose reference class is empty is reported as absent, not 0.
struct SparsityConfusion {
  long true_pos = 0;
  long false_neg = 0;
  long true_neg = 0;
  long false_pos = 0;
  std::optional<double> tp_pct;  // % of true nonzeros estimated nonzero
  std::optional<double> tn_pct;  // % of true zeros estimated zero
};

inline SparsityConfusion sparsity_confusion(const Mask& truth_support,
                                            const Mask& est_support) {
  if (truth_support.dim() != est_support.dim())
    throw DimensionMismatch("sparsity_confusion: mask dims differ");
  const int p = truth_support.dim();
  SparsityConfusion c;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (i == j) continue;
      const bool t = truth_support(i, j);
      const bool e = est_support(i, j);
      if (t && e) ++c.true_pos;
      else if (t && !e) ++c.false_neg;
      else if (!t && !e) ++c.true_neg;
      else ++c.false_pos;
    }
  }
  if (c.true_pos + c.false_neg > 0)
    c.tp_pct = 100.0 * c.true_pos / static_cast<double>(c.true_pos + c.false_neg);
  if (c.true_neg + c.false_pos > 0)
    c.tn_pct = 100.0 * c.true_neg / static_cast<double>(c.true_neg + c.false_pos);
  return c;
}

/// Entry (i,j) counts the replications in which (i,j) was estimated zero.
/// The diagonal is reported as 0.
inline std::vector<std::vector<int>> zero_pattern_counts(const std::vector<Mask>& masks) {
  if (masks.empty()) throw TooFewValues("zero_pattern_counts: no masks");
  const int p = masks.front().dim();
  for (const Mask& m : masks)
    if (m.dim() != p) throw DimensionMismatch("zero_pattern_counts: mask dims differ");
  std::vector<std::vector<int>> counts(p, std::vector<int>(p, 0));
  for (const Mask& m : masks)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        if (i != j && m(i, j)) ++counts[i][j];
  return counts;
}

struct ReplicationSummary {
  double mean = 0.0;
  double se = 0.0;  // sample sd (divisor n-1) / sqrt(n)
  int n_reps = 0;
};

inline ReplicationSummary summarize(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  if (n < 2) throw TooFewValues("summarize: need at least 2 values");
  ReplicationSummary s;
  s.n_reps = n;
  for (double v : values) s.mean += v;
  s.mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.se = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
  return s;
}

}  // namespace spice
