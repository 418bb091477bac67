#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spice/errors.hpp"
#include "spice/linalg.hpp"
#include "spice/matrix.hpp"
#include "spice/solver.hpp"

namespace spice {

/// n x p observation matrix. Centering / standardization metadata is
/// populated by the corresponding transforms.
struct DataMatrix {
  Matrix values;
  std::optional<std::vector<double>> column_means;
  std::optional<std::vector<double>> column_sds;

  DataMatrix() = default;
  explicit DataMatrix(Matrix v) : values(std::move(v)) {}

  int n() const { return values.rows(); }
  int p() const { return values.cols(); }
};

inline std::vector<double> column_means_of(const Matrix& x) {
  const int n = x.rows(), p = x.cols();
  std::vector<double> mu(p, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* r = x.row(i);
    for (int j = 0; j < p; ++j) mu[j] += r[j];
  }
  for (int j = 0; j < p; ++j) mu[j] /= n;
  return mu;
}

/// Subtracts column means; records them in the metadata.
inline DataMatrix centered(const DataMatrix& x) {
  const int n = x.n(), p = x.p();
  std::vector<double> mu = column_means_of(x.values);
  DataMatrix out;
  out.values = Matrix(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) out.values(i, j) = x.values(i, j) - mu[j];
  out.column_means = std::move(mu);
  out.column_sds = x.column_sds;
  return out;
}

/// Sample covariance with divisor n (the likelihood convention), about the
/// column means. The result is symmetric positive semidefinite.
inline SymmetricMatrix sample_covariance(const DataMatrix& x) {
  const int n = x.n(), p = x.p();
  if (n < 2) throw TooFewObservations("sample_covariance: need n >= 2, got " +
                                      std::to_string(n));
  std::vector<double> mu = column_means_of(x.values);
  SymmetricMatrix s(p);
  for (int j = 0; j < p; ++j) {
    for (int k = j; k < p; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        acc += (x.values(i, j) - mu[j]) * (x.values(i, k) - mu[k]);
      s.set(j, k, acc / n);
    }
  }
  return s;
}

/// Diagonal scale W (sample standard deviations) and the correlation
/// matrix Gamma = W^-1 Sigma W^-1, with the unit diagonal set exactly.
struct ScaleDecomposition {
  std::vector<double> W_diag;
  SymmetricMatrix Gamma_hat;
};

inline ScaleDecomposition scale_decompose(const SymmetricMatrix& sigma_hat) {
  const int p = sigma_hat.dim();
  ScaleDecomposition d;
  d.W_diag.resize(p);
  for (int j = 0; j < p; ++j) {
    const double v = sigma_hat(j, j);
    if (!(v > 0.0))
      throw NonPositiveVariance("scale_decompose: variance " + std::to_string(j) +
                                " is not positive");
    d.W_diag[j] = std::sqrt(v);
  }
  d.Gamma_hat = SymmetricMatrix(p);
  for (int i = 0; i < p; ++i) {
    d.Gamma_hat.set(i, i, 1.0);
    for (int j = i + 1; j < p; ++j)
      d.Gamma_hat.set(i, j, sigma_hat(i, j) / (d.W_diag[i] * d.W_diag[j]));
  }
  return d;
}

/// Penalized-likelihood concentration estimate fitted directly on a
/// covariance matrix.
inline EstimateReport spice_covariance(const SymmetricMatrix& sigma_hat,
                                       const PenaltySpec& pen, const SolverConfig& cfg) {
  return solve(sigma_hat, pen, cfg);
}

/// Correlation-based variant: fit on the sample correlation matrix, then
/// rescale the estimate by the inverse sample standard deviations on both
/// sides. Rescaling by positive diagonals preserves the zero pattern
/// exactly, so the reported pattern is the one found on the correlation
/// scale.
inline EstimateReport spice_correlation(const DataMatrix& x, const PenaltySpec& pen,
                                        const SolverConfig& cfg) {
  SymmetricMatrix sigma_hat = sample_covariance(x);
  ScaleDecomposition d = scale_decompose(sigma_hat);
  EstimateReport report = solve(d.Gamma_hat, pen, cfg);
  const int p = sigma_hat.dim();
  SymmetricMatrix rescaled(p);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j)
      rescaled.set(i, j, report.omega_hat(i, j) / (d.W_diag[i] * d.W_diag[j]));
  report.omega_hat = std::move(rescaled);
  return report;
}

/// Shrinkage of the sample covariance toward the scaled identity mu*I with
/// the analytic risk-minimizing intensity (plug-in estimates):
///   mu   = tr(S)/p
///   d2   = ||S - mu I||_F^2 / p
///   bbar = (1/n^2) sum_k ||y_k y_k^T - S||_F^2 / p    (y_k centered rows)
///   rho  = min(bbar, d2) / d2, clipped into [0, 1]
/// returning rho*mu*I + (1-rho)*S. When S is exactly mu*I the shrinkage
/// direction is degenerate and S itself is returned.
inline SymmetricMatrix ledoit_wolf(const DataMatrix& x) {
  const int n = x.n(), p = x.p();
  if (n < 2) throw TooFewObservations("ledoit_wolf: need n >= 2");
  std::vector<double> mu_col = column_means_of(x.values);
  SymmetricMatrix s = sample_covariance(x);

  const double mu = [&] {
    double tr = 0.0;
    for (int j = 0; j < p; ++j) tr += s(j, j);
    return tr / p;
  }();

  double d2 = 0.0;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      const double v = s(i, j) - (i == j ? mu : 0.0);
      d2 += v * v;
    }
  d2 /= p;

  if (d2 <= 0.0) return s;  // sample already equals the target

  double bbar2 = 0.0;
  std::vector<double> y(p);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < p; ++j) y[j] = x.values(k, j) - mu_col[j];
    double acc = 0.0;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        const double v = y[i] * y[j] - s(i, j);
        acc += v * v;
      }
    bbar2 += acc;
  }
  bbar2 /= static_cast<double>(n) * n * p;

  const double b2 = std::min(bbar2, d2);
  const double rho = std::clamp(b2 / d2, 0.0, 1.0);

  SymmetricMatrix out(p);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j)
      out.set(i, j, (1.0 - rho) * s(i, j) + (i == j ? rho * mu : 0.0));
  return out;
}

/// Diagonal matrix of column sample variances (divisor n); the covariance
/// model behind the naive Bayes classifier.
inline SymmetricMatrix naive_bayes_diagonal(const DataMatrix& x) {
  const int n = x.n(), p = x.p();
  if (n < 2) throw TooFewObservations("naive_bayes_diagonal: need n >= 2");
  std::vector<double> mu = column_means_of(x.values);
  SymmetricMatrix out(p);
  for (int j = 0; j < p; ++j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = x.values(i, j) - mu[j];
      acc += d * d;
    }
    out.set(j, j, acc / n);
  }
  return out;
}

}  // namespace spice
