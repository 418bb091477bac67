#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spice/errors.hpp"

namespace spice {

/// Dense row-major rectangular matrix of doubles.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw DimensionMismatch("Matrix: negative dimension");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double operator()(int i, int j) const { return a_[idx(i, j)]; }
  double& operator()(int i, int j) { return a_[idx(i, j)]; }

  const double* row(int i) const { return a_.data() + static_cast<std::size_t>(i) * cols_; }
  double* row(int i) { return a_.data() + static_cast<std::size_t>(i) * cols_; }

  const std::vector<double>& data() const { return a_; }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * cols_ + j; }

  int rows_, cols_;
  std::vector<double> a_;
};

/// Dense p x p symmetric matrix. Full storage; symmetry is maintained by
/// construction: all writes go through set(), which mirrors the entry.
/// Hot loops may read whole rows via row().
class SymmetricMatrix {
 public:
  SymmetricMatrix() : p_(0) {}
  explicit SymmetricMatrix(int p, double fill = 0.0)
      : p_(p), a_(static_cast<std::size_t>(p) * p, fill) {
    if (p < 1) throw DimensionMismatch("SymmetricMatrix: dim must be >= 1");
  }

  static SymmetricMatrix identity(int p) {
    SymmetricMatrix m(p);
    for (int i = 0; i < p; ++i) m.a_[static_cast<std::size_t>(i) * p + i] = 1.0;
    return m;
  }

  static SymmetricMatrix diagonal(const std::vector<double>& d) {
    SymmetricMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.p_; ++i) m.a_[static_cast<std::size_t>(i) * m.p_ + i] = d[i];
    return m;
  }

  int dim() const { return p_; }

  double operator()(int i, int j) const { return a_[idx(i, j)]; }

  void set(int i, int j, double v) {
    a_[idx(i, j)] = v;
    a_[idx(j, i)] = v;
  }

  void add(int i, int j, double v) {
    a_[idx(i, j)] += v;
    if (i != j) a_[idx(j, i)] += v;
  }

  const double* row(int i) const { return a_.data() + static_cast<std::size_t>(i) * p_; }

  // Raw row access for incremental solver updates. The caller is
  // responsible for writing (i,j) and (j,i) identically.
  double* row_unsafe(int i) { return a_.data() + static_cast<std::size_t>(i) * p_; }

  std::vector<double> diag() const {
    std::vector<double> d(p_);
    for (int i = 0; i < p_; ++i) d[i] = a_[idx(i, i)];
    return d;
  }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * p_ + j; }

  int p_;
  std::vector<double> a_;
};

/// Lower-triangular p x p factor with strictly positive diagonal.
/// Entries above the diagonal are structurally zero.
class CholeskyFactor {
 public:
  CholeskyFactor() : p_(0) {}
  explicit CholeskyFactor(int p) : p_(p), a_(static_cast<std::size_t>(p) * p, 0.0) {
    if (p < 1) throw DimensionMismatch("CholeskyFactor: dim must be >= 1");
  }

  static CholeskyFactor identity(int p) {
    CholeskyFactor t(p);
    for (int i = 0; i < p; ++i) t.a_[static_cast<std::size_t>(i) * p + i] = 1.0;
    return t;
  }

  int dim() const { return p_; }

  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * p_ + j]; }

  void set(int i, int j, double v) {
    if (j > i) throw IndexOutOfRange("CholeskyFactor::set: entry above diagonal");
    a_[static_cast<std::size_t>(i) * p_ + j] = v;
  }

  const double* row(int i) const { return a_.data() + static_cast<std::size_t>(i) * p_; }
  double* row(int i) { return a_.data() + static_cast<std::size_t>(i) * p_; }

  /// The Gram product T^T T (symmetric, PD when the diagonal is positive).
  SymmetricMatrix gram() const {
    SymmetricMatrix g(p_);
    for (int i = 0; i < p_; ++i) {
      for (int j = i; j < p_; ++j) {
        // (T^T T)_(i,j) = sum_{m >= max(i,j)} t_mi t_mj
        double s = 0.0;
        for (int m = j; m < p_; ++m) s += (*this)(m, i) * (*this)(m, j);
        g.set(i, j, s);
      }
    }
    return g;
  }

  /// The product T T^T (the reconstruction of a standard factorization).
  SymmetricMatrix outer() const {
    SymmetricMatrix g(p_);
    for (int i = 0; i < p_; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int m = 0; m <= j; ++m) s += (*this)(i, m) * (*this)(j, m);
        g.set(i, j, s);
      }
    }
    return g;
  }

 private:
  int p_;
  std::vector<double> a_;
};

struct EigenBounds {
  double min_eig = 0.0;
  double max_eig = 0.0;
};

/// Symmetric boolean mask over matrix entries (used for sparsity patterns).
class Mask {
 public:
  Mask() : p_(0) {}
  explicit Mask(int p, bool fill = false)
      : p_(p), a_(static_cast<std::size_t>(p) * p, fill ? 1 : 0) {}

  int dim() const { return p_; }

  bool operator()(int i, int j) const {
    return a_[static_cast<std::size_t>(i) * p_ + j] != 0;
  }

  void set(int i, int j, bool v) {
    a_[static_cast<std::size_t>(i) * p_ + j] = v ? 1 : 0;
    a_[static_cast<std::size_t>(j) * p_ + i] = v ? 1 : 0;
  }

  bool operator==(const Mask& other) const { return p_ == other.p_ && a_ == other.a_; }

 private:
  int p_;
  std::vector<std::uint8_t> a_;
};

inline void require_same_dim(const SymmetricMatrix& a, const SymmetricMatrix& b,
                             const char* where) {
  if (a.dim() != b.dim())
    throw DimensionMismatch(std::string(where) + ": dimensions differ (" +
                            std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
}

}  // namespace spice
