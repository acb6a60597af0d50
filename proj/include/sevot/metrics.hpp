#pragma once

#include "sevot/common.hpp"
#include "sevot/ground_metric.hpp"
#include "sevot/labels.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sevot {

// counts(truth, pred) over scored pixels.
class ConfusionMatrix {
 public:
  using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  explicit ConfusionMatrix(Index num_classes);
  explicit ConfusionMatrix(Counts counts);

  Index num_classes() const { return counts_.rows(); }
  const Counts& counts() const { return counts_; }
  std::int64_t operator()(Index truth, Index pred) const { return counts_(truth, pred); }
  std::int64_t total() const { return counts_.sum(); }

  void add(Index truth, Index pred, std::int64_t count = 1);

  std::int64_t true_positives(Index c) const { return counts_(c, c); }
  std::int64_t false_positives(Index c) const { return counts_.col(c).sum() - counts_(c, c); }
  std::int64_t false_negatives(Index c) const { return counts_.row(c).sum() - counts_(c, c); }

  double accuracy() const;
  bool is_diagonal() const;

  // Element-wise sum of confusion over disjoint pixel sets.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) { return a += b; }
  friend bool operator==(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    return a.counts_ == b.counts_;
  }

 private:
  Counts counts_;
};

ConfusionMatrix accumulate_confusion(const SegmentationMap& preds, const SegmentationMap& truths,
                                     Index num_classes);

// Per-pixel predictions against labels; truth == ignore_value is skipped.
ConfusionMatrix accumulate_confusion(std::span<const int> preds, std::span<const int> truths,
                                     Index num_classes,
                                     int ignore_value = SegmentationMap::kDefaultIgnore);

// nullopt where TP + FP + FN = 0.
using ClassIou = std::vector<std::optional<double>>;

ClassIou iou_per_class(const ConfusionMatrix& conf);

// Mean over defined entries, summed in class order. nullopt if none defined.
std::optional<double> mean_iou(const ClassIou& ious);

std::map<int, std::optional<double>> group_iou(const ClassIou& ious,
                                               const ImportanceGrouping& grouping);

// Average ground cost D(pred, truth) per scored pixel.
double severity_weighted_error(const ConfusionMatrix& conf, const GroundMatrix<double>& d);

struct EvalReport {
  ConfusionMatrix confusion;
  ClassIou iou;
  std::optional<double> miou;
  std::map<int, std::optional<double>> group_iou;
  double severity_error = 0.0;
  double accuracy = 0.0;
  std::vector<std::string> class_names;
  std::vector<int> class_group;  // empty when no grouping supplied

  std::string to_json_text(int indent = 2) const;
  // Aligned columns: group header row, class names, IoU x 100, mIoU.
  std::string to_table() const;
};

EvalReport make_report(const ConfusionMatrix& conf, const GroundMatrix<double>& d,
                       const ImportanceGrouping* grouping = nullptr);

}  // namespace sevot
