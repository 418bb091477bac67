#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "spice/errors.hpp"
#include "spice/estimators.hpp"
#include "spice/matrix.hpp"
#include "spice/rng.hpp"

namespace spice {

/// Two-class labeled dataset; labels are 0/1.
struct LabeledData {
  DataMatrix x;
  std::vector<int> labels;

  int n() const { return x.n(); }
  int p() const { return x.p(); }

  std::array<int, 2> class_counts() const {
    std::array<int, 2> c{0, 0};
    for (int l : labels) {
      if (l != 0 && l != 1) throw Error("LabeledData: labels must be 0 or 1");
      ++c[l];
    }
    return c;
  }
};

inline std::array<std::vector<double>, 2> class_means(const LabeledData& data) {
  const int p = data.p();
  std::array<std::vector<double>, 2> mu{std::vector<double>(p, 0.0),
                                        std::vector<double>(p, 0.0)};
  const auto counts = data.class_counts();
  if (counts[0] == 0 || counts[1] == 0)
    throw MissingClass("class_means: both classes must be present");
  for (int i = 0; i < data.n(); ++i) {
    const int l = data.labels[i];
    for (int j = 0; j < p; ++j) mu[l][j] += data.x.values(i, j);
  }
  for (int l = 0; l < 2; ++l)
    for (int j = 0; j < p; ++j) mu[l][j] /= counts[l];
  return mu;
}

/// Rows centered by their own class mean: the data whose covariance is the
/// pooled within-class covariance.
inline DataMatrix pooled_centered(const LabeledData& data) {
  const auto mu = class_means(data);
  const int n = data.n(), p = data.p();
  DataMatrix out;
  out.values = Matrix(n, p);
  for (int i = 0; i < n; ++i) {
    const int l = data.labels[i];
    for (int j = 0; j < p; ++j)
      out.values(i, j) = data.x.values(i, j) - mu[l][j];
  }
  return out;
}

/// Indices of the p_keep columns with the largest absolute two-sample
/// t-statistic (pooled-variance form), in descending order of |t|; ties
/// break toward the smaller column index. A feature with zero pooled
/// variance scores 0 when the class means agree and +inf when they differ.
inline std::vector<int> t_statistic_ranking(const LabeledData& data, int p_keep) {
  const int n = data.n(), p = data.p();
  if (p_keep < 1 || p_keep > p)
    throw Error("t_statistic_ranking: p_keep out of range");
  const auto counts = data.class_counts();
  if (counts[0] < 2 || counts[1] < 2)
    throw TooFewObservations("t_statistic_ranking: each class needs >= 2 observations");
  const auto mu = class_means(data);

  std::vector<double> tstat(p);
  for (int j = 0; j < p; ++j) {
    double ss0 = 0.0, ss1 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = data.x.values(i, j) - mu[data.labels[i]][j];
      if (data.labels[i] == 0) ss0 += d * d;
      else ss1 += d * d;
    }
    const double pooled_var = (ss0 + ss1) / (counts[0] + counts[1] - 2);
    const double diff = mu[1][j] - mu[0][j];
    if (pooled_var == 0.0) {
      tstat[j] = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      const double se = std::sqrt(pooled_var * (1.0 / counts[0] + 1.0 / counts[1]));
      tstat[j] = std::abs(diff) / se;
    }
  }

  std::vector<int> order(p);
  for (int j = 0; j < p; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return tstat[a] > tstat[b]; });
  order.resize(p_keep);
  return order;
}

inline LabeledData select_columns(const LabeledData& data, const std::vector<int>& cols) {
  LabeledData out;
  out.labels = data.labels;
  out.x.values = Matrix(data.n(), static_cast<int>(cols.size()));
  for (int i = 0; i < data.n(); ++i)
    for (int j = 0; j < static_cast<int>(cols.size()); ++j)
      out.x.values(i, j) = data.x.values(i, cols[j]);
  return out;
}

/// Plug-in linear discriminant model: a concentration estimate, the two
/// class means, and the log class proportions.
struct LdaModel {
  SymmetricMatrix omega_hat;
  std::array<std::vector<double>, 2> mu;
  std::array<double, 2> log_prior{0.0, 0.0};
};

inline LdaModel fit_lda(const LabeledData& train, const SymmetricMatrix& omega_hat) {
  if (omega_hat.dim() != train.p())
    throw DimensionMismatch("fit_lda: omega dim != feature count");
  const auto counts = train.class_counts();
  if (counts[0] == 0 || counts[1] == 0)
    throw MissingClass("fit_lda: both classes must be present in training data");
  LdaModel m;
  m.omega_hat = omega_hat;
  m.mu = class_means(train);
  const double n = counts[0] + counts[1];
  m.log_prior = {std::log(counts[0] / n), std::log(counts[1] / n)};
  return m;
}

/// Discriminant score x^T Omega mu_k - mu_k^T Omega mu_k / 2 + log pi_k.
inline double lda_discriminant(const LdaModel& m, const std::vector<double>& x, int k) {
  const int p = m.omega_hat.dim();
  double xt = 0.0, mt = 0.0;
  for (int i = 0; i < p; ++i) {
    const double* row = m.omega_hat.row(i);
    double acc = 0.0;
    for (int j = 0; j < p; ++j) acc += row[j] * m.mu[k][j];
    xt += x[i] * acc;
    mt += m.mu[k][i] * acc;
  }
  return xt - 0.5 * mt + m.log_prior[k];
}

/// Classifies one observation; an exact tie goes to class 0.
inline int lda_classify(const LdaModel& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.omega_hat.dim())
    throw DimensionMismatch("lda_classify: observation length != model dim");
  return lda_discriminant(m, x, 1) > lda_discriminant(m, x, 0) ? 1 : 0;
}

/// Deterministic stratified split: per class a seeded shuffle, the first
/// n_train_per_class indices go to the training set, the rest to the test
/// set. Disjoint and exhaustive.
inline std::pair<LabeledData, LabeledData> stratified_split(
    const LabeledData& data, std::array<int, 2> n_train_per_class, std::uint64_t seed) {
  const auto counts = data.class_counts();
  for (int l = 0; l < 2; ++l)
    if (n_train_per_class[l] > counts[l])
      throw InsufficientClassCount("stratified_split: requested " +
                                   std::to_string(n_train_per_class[l]) + " of class " +
                                   std::to_string(l) + ", have " +
                                   std::to_string(counts[l]));

  std::vector<int> train_idx, test_idx;
  Rng rng(seed);
  for (int l = 0; l < 2; ++l) {
    std::vector<int> idx;
    for (int i = 0; i < data.n(); ++i)
      if (data.labels[i] == l) idx.push_back(i);
    rng.shuffle(idx);
    for (int t = 0; t < static_cast<int>(idx.size()); ++t)
      (t < n_train_per_class[l] ? train_idx : test_idx).push_back(idx[t]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto take = [&](const std::vector<int>& idx) {
    LabeledData out;
    out.x.values = Matrix(static_cast<int>(idx.size()), data.p());
    out.labels.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (int j = 0; j < data.p(); ++j) out.x.values(static_cast<int>(r), j) =
          data.x.values(idx[r], j);
      out.labels[r] = data.labels[idx[r]];
    }
    return out;
  };
  return {take(train_idx), take(test_idx)};
}

}  // namespace spice
