#pragma once

#include "sevot/common.hpp"
#include "sevot/ground_metric.hpp"

#include <optional>

namespace sevot {

// Mass flows: entry (i, j) is the mass moved from source bin i to target bin j.
template <typename Scalar = double>
class TransportPlan {
 public:
  explicit TransportPlan(Matrix<Scalar> flows) : flows_(std::move(flows)) {}

  Index size() const { return flows_.rows(); }
  const Matrix<Scalar>& flows() const { return flows_; }
  Scalar operator()(Index i, Index j) const { return flows_(i, j); }

  Vector<Scalar> row_sums() const { return flows_.rowwise().sum(); }
  Vector<Scalar> col_sums() const { return flows_.colwise().sum().transpose(); }
  Scalar mass() const { return flows_.sum(); }

  Scalar cost(const GroundMatrix<Scalar>& d) const {
    return (flows_.array() * d.entries().array()).sum();
  }

  // Largest absolute deviation of the marginals from (source, target).
  Scalar marginal_residual(const Vector<Scalar>& source, const Vector<Scalar>& target) const {
    return std::max((row_sums() - source).cwiseAbs().maxCoeff(),
                    (col_sums() - target).cwiseAbs().maxCoeff());
  }

 private:
  Matrix<Scalar> flows_;
};

template <typename Scalar = double>
struct LossResult {
  Scalar loss = 0;
  std::optional<TransportPlan<Scalar>> plan;
  // Set only by the iterative solver.
  std::optional<int> iterations;
  std::optional<Scalar> marginal_residual;
};

}  // namespace sevot
