#pragma once

// Random fixtures and reference implementations used only by the tests.
// The oracles are written independently of the library code they check.

#include "sevot/ground_metric.hpp"
#include "sevot/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace sevot::testing {

using Rng = std::mt19937_64;

// Valid ground matrix with off-diagonal entries in [lo, hi]. With
// zero_prob > 0 some off-diagonal entries are exactly zero.
inline GroundMatrix<double> random_matrix(Rng& rng, Index n, double lo = 0.1, double hi = 3.0,
                                          double zero_prob = 0.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::bernoulli_distribution zero(zero_prob);
  Matrix<double> m(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) m(i, j) = (i == j || zero(rng)) ? 0.0 : u(rng);
  }
  return GroundMatrix<double>(std::move(m));
}

// Strictly positive histogram, or one with some exact zeros when sparse.
inline ProbabilityHistogram<double> random_histogram(Rng& rng, Index n, bool sparse = false) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution drop(0.3);
  Vector<double> v(n);
  for (Index i = 0; i < n; ++i) v(i) = e(rng) + 1e-3;
  if (sparse) {
    for (Index i = 0; i < n; ++i) {
      if (drop(rng)) v(i) = 0.0;
    }
    if (v.sum() == 0.0) v(0) = 1.0;
  }
  return ProbabilityHistogram<double>::normalized(v);
}

inline Vector<double> random_logits(Rng& rng, Index n, double scale = 2.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector<double> z(n);
  for (Index i = 0; i < n; ++i) z(i) = g(rng);
  return z;
}

// Plain softmax, no max shift; fine for the moderate logits used in tests.
inline Vector<double> naive_softmax(const Vector<double>& z) {
  Vector<double> e(z.size());
  double total = 0.0;
  for (Index i = 0; i < z.size(); ++i) total += (e(i) = std::exp(z(i)));
  return e / total;
}

// Exact transport cost by enumerating basic solutions: every choice of
// n + m - 1 cells whose graph is a spanning tree has one flow solution; the
// optimum is the cheapest feasible one. Exponential, meant for n, m <= 4.
inline double brute_force_transport(const Vector<double>& a, const Vector<double>& b,
                                    const Matrix<double>& c) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const int cells = n * m;
  const int basis = n + m - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<size_t>(basis));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == basis) {
      // Peel leaves: a row or column with one unresolved cell fixes it.
      std::vector<double> ra(a.data(), a.data() + n);
      std::vector<double> rb(b.data(), b.data() + m);
      std::vector<bool> done(static_cast<size_t>(basis), false);
      std::vector<double> flow(static_cast<size_t>(basis), 0.0);
      for (int solved = 0; solved < basis;) {
        bool progress = false;
        for (int line = 0; line < n + m && !progress; ++line) {
          int only = -1;
          int count = 0;
          for (int k = 0; k < basis; ++k) {
            if (done[static_cast<size_t>(k)]) continue;
            const int r = pick[static_cast<size_t>(k)] / m;
            const int col = pick[static_cast<size_t>(k)] % m;
            if ((line < n && r == line) || (line >= n && col == line - n)) {
              only = k;
              ++count;
            }
          }
          if (count != 1) continue;
          const int r = pick[static_cast<size_t>(only)] / m;
          const int col = pick[static_cast<size_t>(only)] % m;
          const double f = line < n ? ra[static_cast<size_t>(r)] : rb[static_cast<size_t>(col)];
          flow[static_cast<size_t>(only)] = f;
          ra[static_cast<size_t>(r)] -= f;
          rb[static_cast<size_t>(col)] -= f;
          done[static_cast<size_t>(only)] = true;
          ++solved;
          progress = true;
        }
        if (!progress) return;  // contains a cycle
      }
      double cost = 0.0;
      for (int k = 0; k < basis; ++k) {
        if (flow[static_cast<size_t>(k)] < -1e-12) return;
        cost += flow[static_cast<size_t>(k)] *
                c(pick[static_cast<size_t>(k)] / m, pick[static_cast<size_t>(k)] % m);
      }
      for (double r : ra) {
        if (std::abs(r) > 1e-9) return;
      }
      for (double r : rb) {
        if (std::abs(r) > 1e-9) return;
      }
      best = std::min(best, cost);
      return;
    }
    for (int cell = start; cell < cells; ++cell) {
      pick[static_cast<size_t>(depth)] = cell;
      rec(cell + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

// Symmetric relative error; callers route near-zero references elsewhere.
inline double relative_error(double analytic, double reference) {
  return std::abs(analytic - reference) / std::max(std::abs(analytic), std::abs(reference));
}

}  // namespace sevot::testing
