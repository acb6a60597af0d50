#pragma once

// Entropic-regularized transport by Sinkhorn-Knopp matrix balancing. The
// reported loss is the transport cost <D, W> of the regularized plan; the
// entropy term is left out so values approach the exact optimum from above
// as epsilon shrinks.

#include "sevot/common.hpp"
#include "sevot/ground_metric.hpp"
#include "sevot/histogram.hpp"
#include "sevot/transport.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace sevot {

enum class SinkhornDomain {
  automatic,  // scaling iteration unless exp(-D/epsilon) gets too small
  scaling,    // u/v scaling of K = exp(-D/epsilon); fails on underflow
  log,        // log-sum-exp updates of the dual potentials
};

struct SinkhornOptions {
  double epsilon = 0.1;
  int max_iter = 1000;
  double tol = 1e-6;
  SinkhornDomain domain = SinkhornDomain::automatic;
};

template <typename Scalar = double>
struct SinkhornSolution {
  LossResult<Scalar> result;
  // Dual potentials (f, g) with W(i, j) = exp((f_i + g_j - D(i, j)) / epsilon).
  // Zero-mass bins get the soft c-transform of the opposite potential.
  Vector<Scalar> source_potential;
  Vector<Scalar> target_potential;
  bool converged = false;
  bool log_domain = false;
};

namespace detail {

// Above this value of max(D) / epsilon the automatic mode switches to the
// log domain; exp(-100) is ~3.7e-44, leaving headroom for the scalings.
inline constexpr double kScalingExponentLimit = 100.0;

template <typename Scalar>
Scalar log_sum_exp(const Scalar* data, Index n, Index stride) {
  Scalar peak = -std::numeric_limits<Scalar>::infinity();
  for (Index k = 0; k < n; ++k) peak = std::max(peak, data[k * stride]);
  if (!std::isfinite(peak)) return peak;
  Scalar sum = 0;
  for (Index k = 0; k < n; ++k) sum += std::exp(data[k * stride] - peak);
  return peak + std::log(sum);
}

inline std::vector<Index> support_of(const auto& values) {
  std::vector<Index> support;
  for (Index i = 0; i < values.size(); ++i) {
    if (values(i) > 0) support.push_back(i);
  }
  return support;
}

}  // namespace detail

template <typename Scalar>
SinkhornSolution<Scalar> sinkhorn_solve(const ProbabilityHistogram<Scalar>& s,
                                        const ProbabilityHistogram<Scalar>& t,
                                        const GroundMatrix<Scalar>& d,
                                        const SinkhornOptions& options = {}) {
  if (s.size() != t.size() || s.size() != d.size()) {
    throw SizeError("sinkhorn_loss: histogram and matrix sizes differ");
  }
  if (!(options.epsilon > 0.0) || !(options.tol > 0.0) || options.max_iter < 1) {
    throw ValidationError("sinkhorn options need epsilon > 0, tol > 0 and max_iter >= 1");
  }

  const auto eps = static_cast<Scalar>(options.epsilon);
  const Index n = d.size();
  const std::vector<Index> rows = detail::support_of(s.values());
  const std::vector<Index> cols = detail::support_of(t.values());
  const Index nr = static_cast<Index>(rows.size());
  const Index nc = static_cast<Index>(cols.size());

  // Work on the supports only; zero-mass bins carry no flow.
  const Matrix<Scalar> cost = d.entries()(rows, cols);
  const Vector<Scalar> a = s.values()(rows);
  const Vector<Scalar> b = t.values()(cols);

  SinkhornSolution<Scalar> out;
  const double exponent = static_cast<double>(cost.maxCoeff() / eps);
  bool use_log = options.domain == SinkhornDomain::log;
  if (options.domain == SinkhornDomain::automatic) {
    use_log = exponent > detail::kScalingExponentLimit;
  }

  Vector<Scalar> f(nr);
  Vector<Scalar> g(nc);
  Matrix<Scalar> plan_support;
  Scalar residual = std::numeric_limits<Scalar>::infinity();
  int iterations = 0;

  if (!use_log) {
    const Matrix<Scalar> kernel = (-cost / eps).array().exp().matrix();
    if (kernel.minCoeff() < std::numeric_limits<Scalar>::min()) {
      throw NumericalRangeError(
          "exp(-D/epsilon) underflows at epsilon = " + std::to_string(options.epsilon) +
          "; retry with the log-domain solver");
    }
    Vector<Scalar> u = Vector<Scalar>::Ones(nr);
    Vector<Scalar> v = Vector<Scalar>::Ones(nc);
    Vector<Scalar> kv = kernel * v;
    while (iterations < options.max_iter) {
      ++iterations;
      u = a.cwiseQuotient(kv);
      v = b.cwiseQuotient(kernel.transpose() * u);
      kv = kernel * v;
      // Column marginals are exact after the v update; rows carry the error.
      residual = (u.cwiseProduct(kv) - a).cwiseAbs().maxCoeff();
      if (!std::isfinite(static_cast<double>(residual))) {
        throw NumericalError("sinkhorn scaling diverged; retry with the log-domain solver");
      }
      if (residual <= options.tol) break;
    }
    plan_support = u.asDiagonal() * kernel * v.asDiagonal();
    f = eps * u.array().log().matrix();
    g = eps * v.array().log().matrix();
  } else {
    out.log_domain = true;
    const Vector<Scalar> log_a = a.array().log().matrix();
    const Vector<Scalar> log_b = b.array().log().matrix();
    f.setZero();
    g.setZero();
    // Scratch laid out column-major: (i, j) at i + j * nr.
    Matrix<Scalar> scratch(nr, nc);
    while (iterations < options.max_iter) {
      ++iterations;
      scratch = ((-cost).rowwise() + g.transpose()) / eps;
      for (Index i = 0; i < nr; ++i) {
        f(i) = eps * (log_a(i) - detail::log_sum_exp(scratch.data() + i, nc, nr));
      }
      scratch = ((-cost).colwise() + f) / eps;
      for (Index j = 0; j < nc; ++j) {
        g(j) = eps * (log_b(j) - detail::log_sum_exp(scratch.data() + j * nr, nr, 1));
      }
      plan_support = ((((-cost).colwise() + f).rowwise() + g.transpose()) / eps).array().exp();
      residual = (plan_support.rowwise().sum() - a).cwiseAbs().maxCoeff();
      if (!std::isfinite(static_cast<double>(residual))) {
        throw NumericalError("log-domain sinkhorn produced non-finite values");
      }
      if (residual <= options.tol) break;
    }
  }

  // Embed the support solution back into N x N.
  Matrix<Scalar> flows = Matrix<Scalar>::Zero(n, n);
  flows(rows, cols) = plan_support;
  out.source_potential = Vector<Scalar>::Zero(n);
  out.target_potential = Vector<Scalar>::Zero(n);
  out.source_potential(rows) = f;
  out.target_potential(cols) = g;

  std::vector<Scalar> buffer;
  for (Index i = 0; i < n; ++i) {
    if (s(i) > 0) continue;
    buffer.resize(static_cast<size_t>(nc));
    for (Index k = 0; k < nc; ++k) buffer[k] = (g(k) - d(i, cols[k])) / eps;
    out.source_potential(i) = -eps * detail::log_sum_exp(buffer.data(), nc, 1);
  }
  for (Index j = 0; j < n; ++j) {
    if (t(j) > 0) continue;
    buffer.resize(static_cast<size_t>(nr));
    for (Index k = 0; k < nr; ++k) buffer[k] = (f(k) - d(rows[k], j)) / eps;
    out.target_potential(j) = -eps * detail::log_sum_exp(buffer.data(), nr, 1);
  }

  TransportPlan<Scalar> plan(std::move(flows));
  out.result.loss = plan.cost(d);
  out.result.marginal_residual = plan.marginal_residual(s.values(), t.values());
  out.result.iterations = iterations;
  out.converged = *out.result.marginal_residual <= static_cast<Scalar>(options.tol);
  out.result.plan.emplace(std::move(plan));
  return out;
}

template <typename Scalar>
LossResult<Scalar> sinkhorn_loss(const ProbabilityHistogram<Scalar>& s,
                                 const ProbabilityHistogram<Scalar>& t,
                                 const GroundMatrix<Scalar>& d,
                                 const SinkhornOptions& options = {}) {
  return sinkhorn_solve(s, t, d, options).result;
}

}  // namespace sevot
