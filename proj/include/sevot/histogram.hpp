#pragma once

#include "sevot/common.hpp"

#include <cmath>
#include <initializer_list>
#include <string>

namespace sevot {

// Nonnegative vector with unit mass: a softmax prediction or a target.
template <typename Scalar = double>
class ProbabilityHistogram {
 public:
  using VectorType = Vector<Scalar>;

  static constexpr double kSumTolerance = 1e-6;

  // Requires the mass to already be within kSumTolerance of one, then
  // rescales it to one.
  explicit ProbabilityHistogram(VectorType values) : values_(std::move(values)) {
    const Scalar total = check_entries();
    if (std::abs(static_cast<double>(total) - 1.0) > kSumTolerance) {
      throw ValidationError("histogram mass " + std::to_string(static_cast<double>(total)) +
                            " is not within 1e-6 of 1");
    }
    if (total != Scalar(1)) values_ /= total;
  }

  ProbabilityHistogram(std::initializer_list<Scalar> values)
      : ProbabilityHistogram(from_list(values)) {}

  // Accepts any positive mass and divides it out.
  static ProbabilityHistogram normalized(VectorType values) {
    ProbabilityHistogram h;
    h.values_ = std::move(values);
    const Scalar total = h.check_entries();
    h.values_ /= total;
    return h;
  }

  static ProbabilityHistogram dirac(Index n, Index at) {
    check_index(at, n, "class index");
    VectorType v = VectorType::Zero(n);
    v(at) = Scalar(1);
    return ProbabilityHistogram(std::move(v));
  }

  static ProbabilityHistogram uniform(Index n) {
    return ProbabilityHistogram(VectorType::Constant(n, Scalar(1) / static_cast<Scalar>(n)));
  }

  // Max-shifted softmax.
  template <typename Derived>
  static ProbabilityHistogram softmax(const Eigen::MatrixBase<Derived>& logits) {
    ProbabilityHistogram h;
    const Scalar shift = logits.maxCoeff();
    h.values_ = (logits.array() - shift).exp().matrix();
    h.values_ /= h.values_.sum();
    if (!h.values_.allFinite()) throw NumericalError("softmax produced non-finite values");
    return h;
  }

  Index size() const { return values_.size(); }
  Scalar operator()(Index i) const { return values_(i); }
  const VectorType& values() const { return values_; }

  // Smallest index attaining the maximum.
  Index argmax() const {
    Index best = 0;
    for (Index i = 1; i < size(); ++i) {
      if (values_(i) > values_(best)) best = i;
    }
    return best;
  }

  Scalar entropy() const {
    Scalar h = 0;
    for (Index i = 0; i < size(); ++i) {
      if (values_(i) > Scalar(0)) h -= values_(i) * std::log(values_(i));
    }
    return h;
  }

 private:
  ProbabilityHistogram() = default;

  static VectorType from_list(std::initializer_list<Scalar> values) {
    VectorType v(static_cast<Index>(values.size()));
    Index i = 0;
    for (Scalar x : values) v(i++) = x;
    return v;
  }

  Scalar check_entries() const {
    if (values_.size() < 2) throw ValidationError("histogram needs at least 2 bins");
    for (Index i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(static_cast<double>(values_(i))) || values_(i) < Scalar(0)) {
        throw ValidationError("histogram entry " + std::to_string(i) +
                              " is negative or non-finite");
      }
    }
    const Scalar total = values_.sum();
    if (!(total > Scalar(0))) throw ValidationError("histogram has zero mass");
    return total;
  }

  VectorType values_;
};

}  // namespace sevot
