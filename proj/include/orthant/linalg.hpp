// Copyright 2026 The Orthant SMC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ORTHANT_LINALG_HPP
#define ORTHANT_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "orthant/gauss.hpp"

namespace orthant {

/// Dense symmetric matrix, row-major. Sizes in this project stay small
/// (d <= a few hundred), so no packed or sparse storage.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int d) : d_(d), m_(static_cast<std::size_t>(d) * d, 0.0) {
    if (d < 1) throw std::invalid_argument("SymMatrix: dimension must be >= 1");
  }

  static SymMatrix identity(int d) {
    SymMatrix s(d);
    for (int i = 0; i < d; ++i) s(i, i) = 1.0;
    return s;
  }

  /// Builds from row-major data and checks symmetry (1e-12 relative).
  static SymMatrix from_rows(int d, std::span<const double> rows) {
    if (rows.size() != static_cast<std::size_t>(d) * d)
      throw std::invalid_argument("SymMatrix: storage size mismatch");
    SymMatrix s(d);
    std::copy(rows.begin(), rows.end(), s.m_.begin());
    double scale = 0.0;
    for (double v : s.m_) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        if (std::abs(s(i, j) - s(j, i)) > 1e-12 * std::max(scale, 1.0))
          throw std::invalid_argument("SymMatrix: input is not symmetric");
    return s;
  }

  int dim() const { return d_; }
  double& operator()(int i, int j) { return m_[static_cast<std::size_t>(i) * d_ + j]; }
  double operator()(int i, int j) const { return m_[static_cast<std::size_t>(i) * d_ + j]; }
  std::span<const double> data() const { return m_; }

 private:
  int d_ = 0;
  std::vector<double> m_;
};

/// Dense lower-triangular matrix with strictly positive diagonal.
class LowerTriangular {
 public:
  LowerTriangular() = default;
  explicit LowerTriangular(int d)
      : d_(d), m_(static_cast<std::size_t>(d) * d, 0.0) {
    if (d < 1)
      throw std::invalid_argument("LowerTriangular: dimension must be >= 1");
  }

  int dim() const { return d_; }
  double& operator()(int i, int j) { return m_[static_cast<std::size_t>(i) * d_ + j]; }
  double operator()(int i, int j) const { return m_[static_cast<std::size_t>(i) * d_ + j]; }

  /// Row i as a contiguous span of its i+1 stored entries.
  std::span<const double> row(int i) const {
    return {m_.data() + static_cast<std::size_t>(i) * d_,
            static_cast<std::size_t>(i) + 1};
  }

  SymMatrix gram() const {  // L * L^T
    SymMatrix s(d_);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j <= i; ++j) {
        double acc = 0.0;
        for (int k = 0; k <= j; ++k) acc += (*this)(i, k) * (*this)(j, k);
        s(i, j) = acc;
        s(j, i) = acc;
      }
    return s;
  }

 private:
  int d_ = 0;
  std::vector<double> m_;
};

/// Cholesky failure: the matrix is not numerically positive definite.
/// `pivot` is the 0-based index of the failing diagonal entry.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(int pivot)
      : std::runtime_error("cholesky: pivot " + std::to_string(pivot + 1) +
                           " is not positive"),
        pivot_(pivot) {}
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

inline LowerTriangular cholesky(const SymMatrix& sigma) {
  const int d = sigma.dim();
  LowerTriangular L(d);
  for (int j = 0; j < d; ++j) {
    double diag = sigma(j, j);
    for (int k = 0; k < j; ++k) diag -= L(j, k) * L(j, k);
    if (!(diag > 0.0)) throw NotPositiveDefinite(j);
    L(j, j) = std::sqrt(diag);
    for (int i = j + 1; i < d; ++i) {
      double acc = sigma(i, j);
      for (int k = 0; k < j; ++k) acc -= L(i, k) * L(j, k);
      L(i, j) = acc / L(j, j);
    }
  }
  return L;
}

/// Bijection on {0..d-1}; order[k] is the original index placed at position k.
struct Permutation {
  std::vector<int> order;

  static Permutation identity(int d) {
    Permutation p;
    p.order.resize(d);
    std::iota(p.order.begin(), p.order.end(), 0);
    return p;
  }

  int dim() const { return static_cast<int>(order.size()); }

  bool valid() const {
    std::vector<char> seen(order.size(), 0);
    for (int v : order) {
      if (v < 0 || v >= dim() || seen[v]) return false;
      seen[v] = 1;
    }
    return true;
  }

  Permutation inverse() const {
    Permutation p;
    p.order.resize(order.size());
    for (int k = 0; k < dim(); ++k) p.order[order[k]] = k;
    return p;
  }
};

/// Applies a permutation to a covariance and its bound vectors:
/// Sigma'(j,k) = Sigma(p(j), p(k)), a'_j = a_{p(j)}, b'_j = b_{p(j)}.
inline std::tuple<SymMatrix, std::vector<double>, std::vector<double>>
permute_problem(const SymMatrix& sigma, std::span<const double> a,
                std::span<const double> b, const Permutation& p) {
  const int d = sigma.dim();
  if (static_cast<int>(a.size()) != d || static_cast<int>(b.size()) != d ||
      p.dim() != d)
    throw std::invalid_argument("permute_problem: length mismatch");
  SymMatrix out(d);
  std::vector<double> pa(d), pb(d);
  for (int j = 0; j < d; ++j) {
    pa[j] = a[p.order[j]];
    pb[j] = b[p.order[j]];
    for (int k = 0; k < d; ++k) out(j, k) = sigma(p.order[j], p.order[k]);
  }
  return {std::move(out), std::move(pa), std::move(pb)};
}

/// Greedy variable ordering: at each step pick the remaining coordinate whose
/// approximate truncation mass is smallest, substitute its truncated mean,
/// and extend a pivoted Cholesky factor by one column. Ties go to the
/// smallest original index. O(d^3) total.
inline Permutation gibson_ordering(const SymMatrix& sigma,
                                   std::span<const double> a,
                                   std::span<const double> b) {
  const int d = sigma.dim();
  if (static_cast<int>(a.size()) != d || static_cast<int>(b.size()) != d)
    throw std::invalid_argument("gibson_ordering: length mismatch");

  SymMatrix c = sigma;
  std::vector<double> lo(a.begin(), a.end());
  std::vector<double> hi(b.begin(), b.end());
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  // s[k] carries the accumulated mean shift sum_{l<j} L(k,l) y_l and
  // q[k] the accumulated squared factor entries sum_{l<j} L(k,l)^2.
  std::vector<double> s(d, 0.0), q(d, 0.0);
  LowerTriangular L(d);

  for (int j = 0; j < d; ++j) {
    int best = -1;
    double best_mass = kInf;
    for (int k = j; k < d; ++k) {
      double var = c(k, k) - q[k];
      if (!(var > 0.0)) throw NotPositiveDefinite(j);
      double sd = std::sqrt(var);
      double mass = log_interval_mass({(lo[k] - s[k]) / sd, (hi[k] - s[k]) / sd});
      if (mass < best_mass ||
          (mass == best_mass && best >= 0 && perm[k] < perm[best])) {
        best_mass = mass;
        best = k;
      }
    }
    if (best != j) {
      for (int r = 0; r < d; ++r) std::swap(c(r, j), c(r, best));
      for (int r = 0; r < d; ++r) std::swap(c(j, r), c(best, r));
      for (int l = 0; l < j; ++l) std::swap(L(j, l), L(best, l));
      std::swap(lo[j], lo[best]);
      std::swap(hi[j], hi[best]);
      std::swap(s[j], s[best]);
      std::swap(q[j], q[best]);
      std::swap(perm[j], perm[best]);
    }
    double var = c(j, j) - q[j];
    if (!(var > 0.0)) throw NotPositiveDefinite(j);
    L(j, j) = std::sqrt(var);
    for (int i = j + 1; i < d; ++i) {
      double acc = c(i, j);
      for (int l = 0; l < j; ++l) acc -= L(i, l) * L(j, l);
      L(i, j) = acc / L(j, j);
    }
    double y = truncated_mean({(lo[j] - s[j]) / L(j, j), (hi[j] - s[j]) / L(j, j)});
    for (int k = j + 1; k < d; ++k) {
      s[k] += L(k, j) * y;
      q[k] += L(k, j) * L(k, j);
    }
  }
  Permutation p;
  p.order = std::move(perm);
  return p;
}

}  // namespace orthant

#endif  // ORTHANT_LINALG_HPP
