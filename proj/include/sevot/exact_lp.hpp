#pragma once

// Exact discrete optimal transport by the transportation simplex method
// (north-west corner start, u/v potentials, cycle pivots on the basis tree).
// Intended as a verification oracle for small class counts.

#include "sevot/common.hpp"
#include "sevot/ground_metric.hpp"
#include "sevot/histogram.hpp"
#include "sevot/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sevot {

inline constexpr Index kExactLpMaxClasses = 64;

namespace detail {

template <typename Scalar>
class TransportationSimplex {
 public:
  TransportationSimplex(const Vector<Scalar>& supply, const Vector<Scalar>& demand,
                        const Matrix<Scalar>& cost)
      : n_(supply.size()), m_(demand.size()), cost_(cost),
        slot_(Matrix<Index>::Constant(supply.size(), demand.size(), -1)),
        adjacency_(static_cast<size_t>(supply.size() + demand.size())) {
    northwest_corner(supply, demand);
    const Scalar scale = std::max(Scalar(1), cost_.cwiseAbs().maxCoeff());
    tolerance_ = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale;
  }

  Matrix<Scalar> solve() {
    const long max_pivots = 50L * n_ * m_ + 1000;
    Index degenerate_run = 0;
    for (long pivot = 0; pivot < max_pivots; ++pivot) {
      build_adjacency();
      compute_potentials();
      const bool bland = degenerate_run > n_ + m_;
      const auto [ei, ej] = entering_cell(bland);
      if (ei < 0) return flows();
      const Scalar theta = pivot_on(ei, ej);
      degenerate_run = theta > Scalar(0) ? 0 : degenerate_run + 1;
    }
    throw NumericalError("transportation simplex did not terminate");
  }

 private:
  struct Cell {
    Index row;
    Index col;
    Scalar flow;
  };

  void add_basic(Index i, Index j, Scalar flow) {
    slot_(i, j) = static_cast<Index>(basis_.size());
    basis_.push_back({i, j, std::max(flow, Scalar(0))});
  }

  // Produces exactly n + m - 1 basic cells forming a spanning tree, with
  // degenerate zeros where supply and demand are exhausted together.
  void northwest_corner(const Vector<Scalar>& supply, const Vector<Scalar>& demand) {
    Vector<Scalar> a = supply;
    Vector<Scalar> b = demand;
    Index i = 0;
    Index j = 0;
    while (true) {
      if (i == n_ - 1 && j == m_ - 1) {
        add_basic(i, j, a(i));
        break;
      }
      if (i == n_ - 1) {
        const Scalar x = std::max(Scalar(0), b(j));
        add_basic(i, j, x);
        a(i) -= x;
        ++j;
      } else if (j == m_ - 1) {
        const Scalar x = std::max(Scalar(0), a(i));
        add_basic(i, j, x);
        b(j) -= x;
        ++i;
      } else if (a(i) <= b(j)) {
        const Scalar x = std::max(Scalar(0), a(i));
        add_basic(i, j, x);
        b(j) -= x;
        ++i;
      } else {
        const Scalar x = std::max(Scalar(0), b(j));
        add_basic(i, j, x);
        a(i) -= x;
        ++j;
      }
    }
  }

  // Nodes 0..n-1 are rows, n..n+m-1 are columns.
  void build_adjacency() {
    for (auto& edges : adjacency_) edges.clear();
    for (size_t k = 0; k < basis_.size(); ++k) {
      adjacency_[static_cast<size_t>(basis_[k].row)].push_back(k);
      adjacency_[static_cast<size_t>(n_ + basis_[k].col)].push_back(k);
    }
  }

  void compute_potentials() {
    const size_t nodes = adjacency_.size();
    potential_.assign(nodes, Scalar(0));
    visited_.assign(nodes, false);
    queue_.clear();
    queue_.push_back(0);
    visited_[0] = true;
    for (size_t head = 0; head < queue_.size(); ++head) {
      const size_t node = queue_[head];
      for (size_t k : adjacency_[node]) {
        const Cell& c = basis_[k];
        const size_t r = static_cast<size_t>(c.row);
        const size_t q = static_cast<size_t>(n_ + c.col);
        const size_t other = node == r ? q : r;
        if (visited_[other]) continue;
        // u_i + v_j = c_ij on basic cells.
        potential_[other] = cost_(c.row, c.col) - potential_[node];
        visited_[other] = true;
        queue_.push_back(other);
      }
    }
  }

  std::pair<Index, Index> entering_cell(bool bland) const {
    Index best_i = -1;
    Index best_j = -1;
    Scalar best = -tolerance_;
    for (Index i = 0; i < n_; ++i) {
      const Scalar u = potential_[static_cast<size_t>(i)];
      for (Index j = 0; j < m_; ++j) {
        if (slot_(i, j) >= 0) continue;
        const Scalar reduced = cost_(i, j) - u - potential_[static_cast<size_t>(n_ + j)];
        if (reduced < best) {
          if (bland) return {i, j};
          best = reduced;
          best_i = i;
          best_j = j;
        }
      }
    }
    return {best_i, best_j};
  }

  // Moves theta units around the cycle closed by (ei, ej) and swaps the
  // leaving cell out of the basis. Returns theta.
  Scalar pivot_on(Index ei, Index ej) {
    const size_t nodes = adjacency_.size();
    parent_edge_.assign(nodes, std::numeric_limits<size_t>::max());
    visited_.assign(nodes, false);
    queue_.clear();
    const size_t start = static_cast<size_t>(ei);
    const size_t goal = static_cast<size_t>(n_ + ej);
    queue_.push_back(start);
    visited_[start] = true;
    for (size_t head = 0; head < queue_.size() && !visited_[goal]; ++head) {
      const size_t node = queue_[head];
      for (size_t k : adjacency_[node]) {
        const Cell& c = basis_[k];
        const size_t r = static_cast<size_t>(c.row);
        const size_t q = static_cast<size_t>(n_ + c.col);
        const size_t other = node == r ? q : r;
        if (visited_[other]) continue;
        visited_[other] = true;
        parent_edge_[other] = k;
        queue_.push_back(other);
      }
    }

    // Tree path from the column node back to the row node. Edges at odd
    // positions along the path (counting from either end) lose flow.
    path_.clear();
    for (size_t node = goal; node != start;) {
      const size_t k = parent_edge_[node];
      path_.push_back(k);
      const Cell& c = basis_[k];
      const size_t r = static_cast<size_t>(c.row);
      node = node == r ? static_cast<size_t>(n_ + c.col) : r;
    }

    Scalar theta = std::numeric_limits<Scalar>::infinity();
    size_t leaving = 0;
    Index leaving_key = std::numeric_limits<Index>::max();
    for (size_t p = 0; p < path_.size(); p += 2) {
      const Cell& c = basis_[path_[p]];
      const Index key = c.row * m_ + c.col;
      if (c.flow < theta || (c.flow == theta && key < leaving_key)) {
        theta = c.flow;
        leaving = path_[p];
        leaving_key = key;
      }
    }

    for (size_t p = 0; p < path_.size(); ++p) {
      Cell& c = basis_[path_[p]];
      if (p % 2 == 0) {
        c.flow = std::max(Scalar(0), c.flow - theta);
      } else {
        c.flow += theta;
      }
    }

    Cell& out = basis_[leaving];
    slot_(out.row, out.col) = -1;
    out = Cell{ei, ej, theta};
    slot_(ei, ej) = static_cast<Index>(leaving);
    return theta;
  }

  Matrix<Scalar> flows() const {
    Matrix<Scalar> w = Matrix<Scalar>::Zero(n_, m_);
    for (const Cell& c : basis_) w(c.row, c.col) = c.flow;
    return w;
  }

  Index n_;
  Index m_;
  const Matrix<Scalar>& cost_;
  Matrix<Index> slot_;
  std::vector<Cell> basis_;
  std::vector<std::vector<size_t>> adjacency_;
  std::vector<Scalar> potential_;
  std::vector<bool> visited_;
  std::vector<size_t> queue_;
  std::vector<size_t> parent_edge_;
  std::vector<size_t> path_;
  Scalar tolerance_;
};

}  // namespace detail

// Minimum-cost flows between two equal-mass nonnegative vectors.
template <typename Scalar>
Matrix<Scalar> solve_transport(const Vector<Scalar>& supply, const Vector<Scalar>& demand,
                               const Matrix<Scalar>& cost) {
  if (cost.rows() != supply.size() || cost.cols() != demand.size()) {
    throw SizeError("transport cost matrix shape does not match the marginals");
  }
  if (supply.size() == 0 || demand.size() == 0) {
    throw SizeError("transport problem is empty");
  }
  return detail::TransportationSimplex<Scalar>(supply, demand, cost).solve();
}

template <typename Scalar>
LossResult<Scalar> exact_lp_loss(const ProbabilityHistogram<Scalar>& s,
                                 const ProbabilityHistogram<Scalar>& t,
                                 const GroundMatrix<Scalar>& d) {
  if (s.size() != t.size() || s.size() != d.size()) {
    throw SizeError("exact_lp_loss: histogram and matrix sizes differ");
  }
  if (d.size() > kExactLpMaxClasses) {
    throw SizeError("exact_lp_loss supports at most " + std::to_string(kExactLpMaxClasses) +
                    " classes, got " + std::to_string(d.size()));
  }
  LossResult<Scalar> result;
  result.plan.emplace(solve_transport<Scalar>(s.values(), t.values(), d.entries()));
  result.loss = result.plan->cost(d);
  return result;
}

}  // namespace sevot
