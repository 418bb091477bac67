#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spice/errors.hpp"
#include "spice/estimators.hpp"
#include "spice/linalg.hpp"
#include "spice/matrix.hpp"
#include "spice/rng.hpp"

namespace spice {

enum class ModelKind { AR1, AR4, RandomSparse };

/// Ground-truth concentration model. AR1 builds the covariance entrywise
/// as rho^|i-j|; AR4 builds the concentration entrywise from banded
/// coefficients; RandomSparse draws a symmetric 0/0.5 adjacency B
/// (off-diagonal Bernoulli(alpha)) and shifts it to B + delta*I with delta
/// chosen so the condition number is exactly p.
struct ModelSpec {
  ModelKind kind = ModelKind::AR1;
  int p = 30;
  double rho = 0.7;     // AR1 only
  double alpha = 0.1;   // RandomSparse only
  std::uint64_t seed = 0;

  void validate() const {
    if (p < 2) throw Error("ModelSpec: p must be >= 2");
    if (kind == ModelKind::AR1 && !(std::abs(rho) < 1.0))
      throw Error("ModelSpec: need |rho| < 1");
    if (kind == ModelKind::AR4 && p < 5)
      throw Error("ModelSpec: AR4 needs p >= 5 to exercise all bands");
    if (kind == ModelKind::RandomSparse && !(alpha > 0.0 && alpha < 1.0))
      throw Error("ModelSpec: need 0 < alpha < 1");
  }
};

struct GroundTruth {
  SymmetricMatrix omega0;  // true concentration
  SymmetricMatrix sigma0;  // true covariance = omega0^-1
  Mask support;            // true off-diagonal nonzeros
  int s = 0;               // cardinality of the support over ordered pairs
};

/// Off-diagonal mask of entries with |omega_ij| > tol; diagonal always false.
inline Mask support_of(const SymmetricMatrix& omega, double tol) {
  if (tol < 0.0) throw Error("support_of: tol must be >= 0");
  const int p = omega.dim();
  Mask m(p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) m.set(i, j, std::abs(omega(i, j)) > tol);
  return m;
}

inline int support_count(const Mask& m) {
  int s = 0;
  const int p = m.dim();
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (i != j && m(i, j)) ++s;
  return s;
}

namespace detail {

inline SymmetricMatrix draw_sparse_adjacency(int p, double alpha, Rng& rng) {
  // Upper triangle drawn in row-major order for reproducibility.
  SymmetricMatrix b(p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (rng.uniform() <= alpha) b.set(i, j, 0.5);
  return b;
}

}  // namespace detail

inline GroundTruth build_model(const ModelSpec& spec) {
  spec.validate();
  const int p = spec.p;
  GroundTruth truth;

  switch (spec.kind) {
    case ModelKind::AR1: {
      truth.sigma0 = SymmetricMatrix(p);
      for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j)
          truth.sigma0.set(i, j, std::pow(spec.rho, std::abs(i - j)));
      truth.omega0 = invert_pd(truth.sigma0);
      break;
    }
    case ModelKind::AR4: {
      static const double band[5] = {1.0, 0.4, 0.2, 0.2, 0.1};
      truth.omega0 = SymmetricMatrix(p);
      for (int i = 0; i < p; ++i)
        for (int j = i; j < p && j - i <= 4; ++j) truth.omega0.set(i, j, band[j - i]);
      // PD must hold for the requested p; inversion throws loudly if not.
      truth.sigma0 = invert_pd(truth.omega0);
      break;
    }
    case ModelKind::RandomSparse: {
      Rng rng(derive_seed(spec.seed, 0xB0));
      SymmetricMatrix b = detail::draw_sparse_adjacency(p, spec.alpha, rng);
      EigenBounds eb = extreme_eigenvalues(b, 1e-10);
      if (eb.max_eig - eb.min_eig < 1e-12) {
        // an all-zero draw has no spectrum to shift; resample once
        b = detail::draw_sparse_adjacency(p, spec.alpha, rng);
        eb = extreme_eigenvalues(b, 1e-10);
        if (eb.max_eig - eb.min_eig < 1e-12)
          throw DegenerateModel("build_model: adjacency drawn empty twice");
      }
      // delta solves (max + delta) / (min + delta) = p exactly
      const double delta = (eb.max_eig - p * eb.min_eig) / (p - 1.0);
      truth.omega0 = b;
      for (int i = 0; i < p; ++i) truth.omega0.set(i, i, delta);
      truth.sigma0 = invert_pd(truth.omega0);
      break;
    }
  }

  truth.support = support_of(truth.omega0, 1e-8);
  truth.s = support_count(truth.support);
  return truth;
}

/// n i.i.d. rows from N(0, sigma0), generated as x_i = L z_i with
/// L the lower Cholesky factor of sigma0 and z_i standard normal.
/// Deterministic given the seed.
inline DataMatrix sample_mvn(const GroundTruth& truth, int n, std::uint64_t seed) {
  if (n < 1) throw TooFewObservations("sample_mvn: need n >= 1");
  const int p = truth.sigma0.dim();
  CholeskyFactor L = cholesky_factor(truth.sigma0);
  Rng rng(seed);
  Matrix x(n, p);
  std::vector<double> z(p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) z[j] = rng.normal();
    double* out = x.row(i);
    for (int r = 0; r < p; ++r) {
      const double* lr = L.row(r);
      double acc = 0.0;
      for (int k = 0; k <= r; ++k) acc += lr[k] * z[k];
      out[r] = acc;
    }
  }
  return DataMatrix(std::move(x));
}

inline std::string model_name(ModelKind kind, double alpha = 0.0) {
  switch (kind) {
    case ModelKind::AR1: return "ar1";
    case ModelKind::AR4: return "ar4";
    case ModelKind::RandomSparse: return alpha >= 0.3 ? "rand05" : "rand01";
  }
  return "?";
}

}  // namespace spice
