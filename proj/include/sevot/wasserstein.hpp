#pragma once

// Closed-form Wasserstein losses against one-hot targets, the step-metric
// (total variation) shortcut, and the cross-entropy and argmax-regression
// baselines. General targets are handled in exact_lp.hpp and sinkhorn.hpp.

#include "sevot/common.hpp"
#include "sevot/ground_metric.hpp"
#include "sevot/histogram.hpp"
#include "sevot/transport.hpp"

#include <algorithm>
#include <cmath>

namespace sevot {

enum class WithPlan : bool { no = false, yes = true };

namespace detail {

inline void check_same_size(Index a, Index b, const char* what) {
  if (a != b) {
    throw SizeError(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " +
                    std::to_string(b) + ")");
  }
}

}  // namespace detail

// sum_i s_i D(i, j*). O(N), no allocation.
template <typename Scalar>
Scalar onehot_loss_value(const ProbabilityHistogram<Scalar>& s, Index j_star,
                         const GroundMatrix<Scalar>& d) {
  detail::check_same_size(s.size(), d.size(), "onehot_loss");
  check_index(j_star, d.size(), "target class");
  return s.values().dot(d.column(j_star));
}

// With a one-hot target every unit of mass must travel to j*, so the only
// feasible plan is W(i, j*) = s_i.
template <typename Scalar>
LossResult<Scalar> onehot_loss(const ProbabilityHistogram<Scalar>& s, Index j_star,
                               const GroundMatrix<Scalar>& d, WithPlan with_plan = WithPlan::no) {
  LossResult<Scalar> result;
  result.loss = onehot_loss_value(s, j_star, d);
  if (with_plan == WithPlan::yes) {
    Matrix<Scalar> flows = Matrix<Scalar>::Zero(s.size(), s.size());
    flows.col(j_star) = s.values();
    result.plan.emplace(std::move(flows));
  }
  return result;
}

template <typename Scalar>
struct OnehotGradient {
  Vector<Scalar> wrt_probs;
  Vector<Scalar> wrt_logits;
};

// Pulls a probability-space gradient back through softmax:
// J^T g with J(i, k) = s_i (delta_ik - s_k), i.e. s .* (g - <s, g>).
template <typename Scalar>
Vector<Scalar> softmax_backward(const Vector<Scalar>& probs, const Vector<Scalar>& grad_probs) {
  const Scalar mean = probs.dot(grad_probs);
  return (probs.array() * (grad_probs.array() - mean)).matrix();
}

template <typename Scalar>
OnehotGradient<Scalar> onehot_loss_grad(const ProbabilityHistogram<Scalar>& s, Index j_star,
                                        const GroundMatrix<Scalar>& d) {
  detail::check_same_size(s.size(), d.size(), "onehot_loss_grad");
  check_index(j_star, d.size(), "target class");
  OnehotGradient<Scalar> g;
  g.wrt_probs = d.column(j_star);
  g.wrt_logits = softmax_backward<Scalar>(s.values(), g.wrt_probs);
  return g;
}

// Wasserstein loss under the step metric: half the l1 distance.
template <typename Scalar>
LossResult<Scalar> l1_loss(const ProbabilityHistogram<Scalar>& s,
                           const ProbabilityHistogram<Scalar>& t) {
  detail::check_same_size(s.size(), t.size(), "l1_loss");
  LossResult<Scalar> result;
  result.loss = Scalar(0.5) * (s.values() - t.values()).cwiseAbs().sum();
  return result;
}

inline constexpr double kCrossEntropyFloor = 1e-12;

template <typename Scalar>
Scalar ce_loss(const ProbabilityHistogram<Scalar>& s, Index j_star) {
  check_index(j_star, s.size(), "target class");
  const Scalar p = std::clamp(s(j_star), static_cast<Scalar>(kCrossEntropyFloor), Scalar(1));
  return -std::log(p);
}

// Cost of the hard decision: D(argmax s, j*).
template <typename Scalar>
Scalar regression_baseline_loss(const ProbabilityHistogram<Scalar>& s, Index j_star,
                                const GroundMatrix<Scalar>& d) {
  detail::check_same_size(s.size(), d.size(), "regression_baseline_loss");
  check_index(j_star, d.size(), "target class");
  return d(s.argmax(), j_star);
}

}  // namespace sevot
