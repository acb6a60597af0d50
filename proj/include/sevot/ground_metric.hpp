#pragma once

#include "sevot/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sevot {

// Classes clustered into importance groups, each group carrying a severity
// weight. Validated on construction.
class ImportanceGrouping {
 public:
  ImportanceGrouping(std::vector<std::string> class_names,
                     std::vector<int> group_of, std::map<int, double> weight_of);

  // Class names are generated as "class<i>".
  static ImportanceGrouping from_groups(const std::vector<int>& group_of,
                                        std::map<int, double> weight_of);

  Index num_classes() const { return static_cast<Index>(group_of_.size()); }
  const std::vector<std::string>& class_names() const { return class_names_; }
  int group_of(Index cls) const { return group_of_[static_cast<size_t>(cls)]; }
  double weight_of_group(int group) const { return weight_of_.at(group); }
  double weight_of_class(Index cls) const { return weight_of_group(group_of(cls)); }
  const std::map<int, double>& weights() const { return weight_of_; }
  std::vector<int> groups() const;
  std::vector<Index> classes_in(int group) const;

  // Empty iff the invariants hold.
  static std::vector<std::string> violations(const std::vector<std::string>& names,
                                             const std::vector<int>& group_of,
                                             const std::map<int, double>& weight_of);

 private:
  std::vector<std::string> class_names_;
  std::vector<int> group_of_;
  std::map<int, double> weight_of_;
};

struct MatrixViolation {
  enum class Kind { not_square, non_finite, negative, nonzero_diagonal };
  Kind kind;
  Index row = -1;
  Index col = -1;
  double value = 0.0;

  std::string describe() const;
};

struct MatrixValidation {
  std::vector<MatrixViolation> violations;

  bool ok() const { return violations.empty(); }
  std::vector<std::string> describe() const;
};

template <typename Derived>
MatrixValidation validate_matrix(const Eigen::MatrixBase<Derived>& entries) {
  MatrixValidation result;
  if (entries.rows() != entries.cols()) {
    result.violations.push_back({MatrixViolation::Kind::not_square, entries.rows(),
                                 entries.cols(), 0.0});
    return result;
  }
  for (Index j = 0; j < entries.cols(); ++j) {
    for (Index i = 0; i < entries.rows(); ++i) {
      const double v = static_cast<double>(entries(i, j));
      if (!std::isfinite(v)) {
        result.violations.push_back({MatrixViolation::Kind::non_finite, i, j, v});
      } else if (v < 0.0) {
        result.violations.push_back({MatrixViolation::Kind::negative, i, j, v});
      } else if (i == j && v != 0.0) {
        result.violations.push_back({MatrixViolation::Kind::nonzero_diagonal, i, j, v});
      }
    }
  }
  return result;
}

// Square cost matrix: entry (i, j) is the cost of predicting class i when the
// truth is class j. Nonnegative with a zero diagonal; symmetry not required.
template <typename Scalar = double>
class GroundMatrix {
 public:
  using MatrixType = Matrix<Scalar>;

  explicit GroundMatrix(MatrixType entries, std::vector<std::string> class_names = {})
      : entries_(std::move(entries)), class_names_(std::move(class_names)) {
    const MatrixValidation report = validate_matrix(entries_);
    if (!report.ok()) {
      throw ValidationError("invalid ground matrix", report.describe());
    }
    if (entries_.rows() < 2) {
      throw ValidationError("ground matrix needs at least 2 classes");
    }
    if (class_names_.empty()) {
      for (Index i = 0; i < entries_.rows(); ++i) {
        class_names_.push_back("class" + std::to_string(i));
      }
    } else if (static_cast<Index>(class_names_.size()) != entries_.rows()) {
      throw ValidationError("ground matrix has " + std::to_string(entries_.rows()) +
                            " rows but " + std::to_string(class_names_.size()) +
                            " class names");
    }
  }

  Index size() const { return entries_.rows(); }
  Scalar operator()(Index i, Index j) const { return entries_(i, j); }
  const MatrixType& entries() const { return entries_; }
  auto column(Index j) const { return entries_.col(j); }
  const std::vector<std::string>& class_names() const { return class_names_; }

  bool is_symmetric() const { return entries_ == entries_.transpose(); }

  // Smallest and largest off-diagonal entry.
  std::pair<Scalar, Scalar> off_diagonal_range() const {
    Scalar lo = std::numeric_limits<Scalar>::infinity();
    Scalar hi = -lo;
    for (Index j = 0; j < size(); ++j) {
      for (Index i = 0; i < size(); ++i) {
        if (i == j) continue;
        lo = std::min(lo, entries_(i, j));
        hi = std::max(hi, entries_(i, j));
      }
    }
    return {lo, hi};
  }

  template <typename Other>
  GroundMatrix<Other> cast() const {
    return GroundMatrix<Other>(entries_.template cast<Other>(), class_names_);
  }

 private:
  MatrixType entries_;
  std::vector<std::string> class_names_;
};

// Nondecreasing map f with f(0) = 0 applied to ground distances.
class MetricFn {
 public:
  enum class Kind { identity, power, huber, step };

  static MetricFn identity() { return MetricFn(Kind::identity, 1.0); }
  static MetricFn power(double rho);
  static MetricFn huber(double tau);
  static MetricFn step() { return MetricFn(Kind::step, 0.0); }

  // "identity", "power:<rho>", "huber:<tau>", "step".
  static MetricFn parse(std::string_view text);
  std::string to_string() const;

  Kind kind() const { return kind_; }
  double parameter() const { return param_; }

  template <typename Scalar>
  Scalar operator()(Scalar d) const {
    switch (kind_) {
      case Kind::identity:
        return d;
      case Kind::power:
        if (param_ == 1.0) return d;
        if (param_ == 2.0) return d * d;
        return std::pow(d, static_cast<Scalar>(param_));
      case Kind::huber: {
        const auto tau = static_cast<Scalar>(param_);
        return d <= tau ? d * d : tau * (Scalar(2) * d - tau);
      }
      case Kind::step:
        return d == Scalar(0) ? Scalar(0) : Scalar(1);
    }
    return d;
  }

  friend bool operator==(const MetricFn&, const MetricFn&) = default;

 private:
  MetricFn(Kind kind, double param) : kind_(kind), param_(param) {}

  Kind kind_;
  double param_;
};

template <typename Scalar>
Scalar eval_metric_fn(const MetricFn& f, Scalar d) {
  return f(d);
}

template <typename Scalar>
GroundMatrix<Scalar> apply_metric_fn(const GroundMatrix<Scalar>& d, const MetricFn& f) {
  Matrix<Scalar> mapped = d.entries().unaryExpr([&f](Scalar x) { return f(x); });
  return GroundMatrix<Scalar>(std::move(mapped), d.class_names());
}

// Off-diagonal cost is the larger of the two classes' group weights, so
// confusing an important class in either direction costs its weight.
template <typename Scalar = double>
GroundMatrix<Scalar> build_group_matrix(const ImportanceGrouping& grouping) {
  const Index n = grouping.num_classes();
  Matrix<Scalar> entries = Matrix<Scalar>::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j) continue;
      entries(i, j) = static_cast<Scalar>(
          std::max(grouping.weight_of_class(i), grouping.weight_of_class(j)));
    }
  }
  return GroundMatrix<Scalar>(std::move(entries), grouping.class_names());
}

// Optional rho-th root for reporting a power-metric loss on the distance scale.
// Never applied inside training losses.
template <typename Scalar>
Scalar root_normalize(Scalar loss, const MetricFn& f) {
  if (f.kind() == MetricFn::Kind::power && f.parameter() != 1.0) {
    return std::pow(loss, Scalar(1) / static_cast<Scalar>(f.parameter()));
  }
  return loss;
}

// 0/1 cost: every misclassification costs one.
template <typename Scalar = double>
GroundMatrix<Scalar> zero_one_matrix(Index n) {
  Matrix<Scalar> entries = Matrix<Scalar>::Ones(n, n);
  entries.diagonal().setZero();
  return GroundMatrix<Scalar>(std::move(entries));
}

// Four importance groups, most important last: sky < buildings/nature <
// road/sidewalk/train < people and vehicles.
ImportanceGrouping cityscapes_grouping(std::map<int, double> weights = {
                                           {1, 1.0}, {2, 2.0}, {3, 3.0}, {4, 4.0}});

}  // namespace sevot
