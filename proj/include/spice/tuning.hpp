#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spice/classify.hpp"
#include "spice/errors.hpp"
#include "spice/estimators.hpp"
#include "spice/matrix.hpp"
#include "spice/rng.hpp"
#include "spice/solver.hpp"

namespace spice {

enum class SpiceMode { correlation, covariance };

/// One penalized fit on data, in either the correlation-then-rescale mode
/// (the default estimation path) or directly on the sample covariance.
inline EstimateReport fit_spice(const DataMatrix& x, const PenaltySpec& pen,
                                const SolverConfig& cfg,
                                SpiceMode mode = SpiceMode::correlation) {
  if (mode == SpiceMode::correlation) return spice_correlation(x, pen, cfg);
  return spice_covariance(sample_covariance(x), pen, cfg);
}

struct LambdaGrid {
  std::vector<double> values;  // strictly increasing, nonnegative

  void validate() const {
    if (values.empty()) throw Error("LambdaGrid: empty grid");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] >= 0.0)) throw Error("LambdaGrid: negative lambda");
      if (i > 0 && !(values[i] > values[i - 1]))
        throw Error("LambdaGrid: values must be strictly increasing");
    }
  }
};

inline LambdaGrid log_spaced_grid(double lo, double hi, int k) {
  if (!(lo > 0.0) || !(hi > lo) || k < 2) {
    if (k == 1 && lo > 0.0) return {{lo}};
    throw Error("log_spaced_grid: need 0 < lo < hi and k >= 2");
  }
  LambdaGrid g;
  g.values.resize(k);
  const double step = (std::log(hi) - std::log(lo)) / (k - 1);
  for (int i = 0; i < k; ++i) g.values[i] = std::exp(std::log(lo) + i * step);
  g.values.back() = hi;
  return g;
}

inline LambdaGrid linear_grid(double lo, double hi, int k) {
  if (!(hi > lo) || k < 2) {
    if (k == 1) return {{lo}};
    throw Error("linear_grid: need lo < hi and k >= 2");
  }
  LambdaGrid g;
  g.values.resize(k);
  for (int i = 0; i < k; ++i) g.values[i] = lo + (hi - lo) * i / (k - 1);
  return g;
}

/// Default grid: 20 log-spaced values from 0.01*lambda_ref to lambda_ref,
/// where lambda_ref is the largest absolute off-diagonal sample
/// correlation. Beyond lambda_ref the correlation-based estimate is fully
/// diagonal; below 1% of it the fit is near the unpenalized one.
inline LambdaGrid default_grid(const DataMatrix& x, int k = 20) {
  ScaleDecomposition d = scale_decompose(sample_covariance(x));
  double lambda_ref = 0.0;
  const int p = d.Gamma_hat.dim();
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      lambda_ref = std::max(lambda_ref, std::abs(d.Gamma_hat(i, j)));
  if (lambda_ref <= 0.0) lambda_ref = 1e-3;  // all correlations zero
  return log_spaced_grid(0.01 * lambda_ref, lambda_ref, k);
}

enum class TuningCriterion { validation_likelihood, cv_likelihood, cv_classification_error };

inline std::string criterion_name(TuningCriterion c) {
  switch (c) {
    case TuningCriterion::validation_likelihood: return "validation_likelihood";
    case TuningCriterion::cv_likelihood: return "cv_likelihood";
    case TuningCriterion::cv_classification_error: return "cv_classification_error";
  }
  return "?";
}

struct TuningResult {
  double best_lambda = 0.0;
  std::vector<std::pair<double, double>> criterion_values;  // (lambda, score)
  std::vector<double> failed_lambdas;
  TuningCriterion criterion = TuningCriterion::validation_likelihood;
};

/// Gaussian validation criterion tr(Omega_hat Sigma_val) - log|Omega_hat|,
/// the negative validation log-likelihood up to constants; smaller is
/// better. Minimized over positive definite matrices at
/// Omega_hat = Sigma_val^-1, where it equals p + log|Sigma_val|.
inline double validation_score(const SymmetricMatrix& omega_hat,
                               const SymmetricMatrix& sigma_val) {
  require_same_dim(omega_hat, sigma_val, "validation_score");
  const int p = omega_hat.dim();
  double trace = 0.0;
  for (int i = 0; i < p; ++i) {
    const double* ro = omega_hat.row(i);
    const double* rs = sigma_val.row(i);
    for (int j = 0; j < p; ++j) trace += ro[j] * rs[j];
  }
  return trace - log_det_pd(omega_hat);
}

namespace detail {

// Argmin over recorded (lambda, score) pairs; ties go to the larger
// lambda (grids are scanned in increasing order with a <= comparison).
inline double best_lambda_of(const std::vector<std::pair<double, double>>& vals) {
  if (vals.empty()) throw AllFitsFailed("tuning: every lambda fit failed");
  double best_l = vals.front().first;
  double best_s = vals.front().second;
  for (const auto& [l, s] : vals) {
    if (s <= best_s) {
      best_s = s;
      best_l = l;
    }
  }
  return best_l;
}

}  // namespace detail

/// Fits at each grid value on the training data and keeps the lambda whose
/// estimate maximizes the Gaussian likelihood of the validation data.
/// A lambda whose fit throws is recorded as failed and excluded.
inline TuningResult select_lambda_validation(const DataMatrix& x_train,
                                             const DataMatrix& x_val, const LambdaGrid& grid,
                                             const PenaltySpec& pen_template,
                                             const SolverConfig& cfg,
                                             SpiceMode mode = SpiceMode::correlation) {
  grid.validate();
  if (x_train.p() != x_val.p())
    throw DimensionMismatch("select_lambda_validation: train/val p differ");
  const SymmetricMatrix sigma_val = sample_covariance(x_val);

  TuningResult result;
  result.criterion = TuningCriterion::validation_likelihood;
  for (double lambda : grid.values) {
    PenaltySpec pen = pen_template;
    pen.lambda = lambda;
    try {
      EstimateReport rep = fit_spice(x_train, pen, cfg, mode);
      result.criterion_values.emplace_back(lambda,
                                           validation_score(rep.omega_hat, sigma_val));
    } catch (const Error&) {
      result.failed_lambdas.push_back(lambda);
    }
  }
  result.best_lambda = detail::best_lambda_of(result.criterion_values);
  return result;
}

namespace detail {

// Deterministic fold assignment: per stratum a seeded shuffle, then a
// round-robin deal. Every index lands in exactly one fold.
inline std::vector<int> fold_assignment(int n, int k, const std::vector<int>* labels,
                                        std::uint64_t seed) {
  std::vector<int> fold(n, -1);
  std::vector<std::vector<int>> strata;
  if (labels) {
    strata.assign(2, {});
    for (int i = 0; i < n; ++i) strata[(*labels)[i]].push_back(i);
  } else {
    strata.assign(1, {});
    for (int i = 0; i < n; ++i) strata[0].push_back(i);
  }
  int dealt = 0;
  Rng rng(derive_seed(seed, 0xF01d));
  for (auto& idx : strata) {
    rng.shuffle(idx);
    for (int i : idx) fold[i] = dealt++ % k;
  }
  return fold;
}

inline LabeledData rows_where(const LabeledData& data, const std::vector<int>& fold,
                              int which, bool equal) {
  std::vector<int> idx;
  for (int i = 0; i < data.n(); ++i)
    if ((fold[i] == which) == equal) idx.push_back(i);
  LabeledData out;
  out.x.values = Matrix(static_cast<int>(idx.size()), data.p());
  out.labels.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (int j = 0; j < data.p(); ++j)
      out.x.values(static_cast<int>(r), j) = data.x.values(idx[r], j);
    out.labels[r] = data.labels[idx[r]];
  }
  return out;
}

// Mean of (x_i - mu)^T Omega (x_i - mu) - log|Omega| over the held-out
// rows, with mu the training-part column means; well defined even for
// single-observation folds.
inline double heldout_likelihood_score(const SymmetricMatrix& omega,
                                       const DataMatrix& val,
                                       const std::vector<double>& mu_train) {
  const int m = val.n(), p = val.p();
  const double logdet = log_det_pd(omega);
  double total = 0.0;
  std::vector<double> y(p);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p; ++j) y[j] = val.values(i, j) - mu_train[j];
    double quad = 0.0;
    for (int a = 0; a < p; ++a) {
      const double* row = omega.row(a);
      double acc = 0.0;
      for (int b = 0; b < p; ++b) acc += row[b] * y[b];
      quad += y[a] * acc;
    }
    total += quad;
  }
  return total / m - logdet;
}

}  // namespace detail

/// k-fold cross-validation over the grid. Folds are deterministic given
/// the seed and stratified by label when labels are present. The
/// likelihood criterion scores each held-out fold against the
/// training-part mean; the classification criterion runs the full
/// discriminant pipeline per fold (pooled within-class centering, fit,
/// classify) and scores the error percentage. Per-lambda scores are fold
/// averages; any fold failure excludes that lambda.
inline TuningResult select_lambda_cv(const DataMatrix& x, int k, const LambdaGrid& grid,
                                     TuningCriterion criterion,
                                     const PenaltySpec& pen_template, const SolverConfig& cfg,
                                     const std::vector<int>* labels = nullptr,
                                     std::uint64_t seed = 0,
                                     SpiceMode mode = SpiceMode::correlation) {
  grid.validate();
  if (criterion == TuningCriterion::validation_likelihood)
    throw Error("select_lambda_cv: use select_lambda_validation for that criterion");
  if (criterion == TuningCriterion::cv_classification_error && labels == nullptr)
    throw MissingLabels("select_lambda_cv: classification criterion needs labels");
  const int n = x.n();
  if (k < 2 || k > n)
    throw TooFewObservations("select_lambda_cv: need 2 <= k <= n");
  if (labels && static_cast<int>(labels->size()) != n)
    throw DimensionMismatch("select_lambda_cv: label count != n");

  LabeledData all;
  all.x = x;
  all.labels = labels ? *labels : std::vector<int>(n, 0);
  const std::vector<int> fold = detail::fold_assignment(n, k, labels, seed);

  TuningResult result;
  result.criterion = criterion;
  for (double lambda : grid.values) {
    PenaltySpec pen = pen_template;
    pen.lambda = lambda;
    double score_sum = 0.0;
    bool ok = true;
    for (int f = 0; f < k && ok; ++f) {
      LabeledData train = detail::rows_where(all, fold, f, false);
      LabeledData val = detail::rows_where(all, fold, f, true);
      if (train.n() < 2 || val.n() < 1) {
        ok = false;
        break;
      }
      try {
        if (criterion == TuningCriterion::cv_likelihood) {
          EstimateReport rep = fit_spice(train.x, pen, cfg, mode);
          score_sum += detail::heldout_likelihood_score(
              rep.omega_hat, val.x, column_means_of(train.x.values));
        } else {
          EstimateReport rep = fit_spice(pooled_centered(train), pen, cfg, mode);
          LdaModel model = fit_lda(train, rep.omega_hat);
          int wrong = 0;
          std::vector<double> obs(val.p());
          for (int i = 0; i < val.n(); ++i) {
            for (int j = 0; j < val.p(); ++j) obs[j] = val.x.values(i, j);
            if (lda_classify(model, obs) != val.labels[i]) ++wrong;
          }
          score_sum += 100.0 * wrong / val.n();
        }
      } catch (const Error&) {
        ok = false;
      }
    }
    if (ok)
      result.criterion_values.emplace_back(lambda, score_sum / k);
    else
      result.failed_lambdas.push_back(lambda);
  }
  result.best_lambda = detail::best_lambda_of(result.criterion_values);
  return result;
}

}  // namespace spice
