#pragma once

#include "sevot/common.hpp"
#include "sevot/histogram.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sevot {

class OneHotTarget {
 public:
  OneHotTarget(Index num_classes, Index j_star) : n_(num_classes), j_star_(j_star) {
    if (num_classes < 2) throw ValidationError("one-hot target needs at least 2 classes");
    check_index(j_star, num_classes, "target class");
  }

  Index num_classes() const { return n_; }
  Index j_star() const { return j_star_; }

 private:
  Index n_;
  Index j_star_;
};

template <typename Scalar = double>
class SoftTarget {
 public:
  explicit SoftTarget(ProbabilityHistogram<Scalar> histogram)
      : histogram_(std::move(histogram)) {}

  const ProbabilityHistogram<Scalar>& histogram() const { return histogram_; }
  Scalar entropy() const { return histogram_.entropy(); }

 private:
  ProbabilityHistogram<Scalar> histogram_;
};

template <typename Scalar = double>
ProbabilityHistogram<Scalar> onehot_to_histogram(const OneHotTarget& target) {
  return ProbabilityHistogram<Scalar>::dirac(target.num_classes(), target.j_star());
}

// Conservative target (1 - alpha) * delta_{j*} + alpha / N.
template <typename Scalar = double>
SoftTarget<Scalar> smooth_onehot(const OneHotTarget& target, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ValidationError("smoothing alpha must lie in [0, 1), got " + std::to_string(alpha));
  }
  const Index n = target.num_classes();
  const auto a = static_cast<Scalar>(alpha);
  Vector<Scalar> t = Vector<Scalar>::Constant(n, a / static_cast<Scalar>(n));
  t(target.j_star()) += Scalar(1) - a;
  return SoftTarget<Scalar>(ProbabilityHistogram<Scalar>(std::move(t)));
}

// Row-major per-pixel class indices; `ignore_value` marks unscored pixels.
class SegmentationMap {
 public:
  static constexpr int kDefaultIgnore = 255;

  SegmentationMap(Index height, Index width, std::vector<int> labels,
                  int ignore_value = kDefaultIgnore);

  Index height() const { return height_; }
  Index width() const { return width_; }
  Index num_pixels() const { return height_ * width_; }
  int ignore_value() const { return ignore_; }
  const std::vector<int>& labels() const { return labels_; }
  int at(Index row, Index col) const { return labels_[static_cast<size_t>(row * width_ + col)]; }
  bool ignored(Index pixel) const { return labels_[static_cast<size_t>(pixel)] == ignore_; }

  // Every scored label lies in [0, num_classes).
  void check_classes(Index num_classes) const;

  // {"height", "width", "ignore_value", "labels"}.
  static SegmentationMap from_json_text(const std::string& text);
  std::string to_json_text() const;
  // Headerless grid; one row per line, comma or whitespace separated.
  static SegmentationMap from_csv_text(const std::string& text, int ignore_value = kDefaultIgnore);
  // Dispatches on extension: .csv is a grid, anything else JSON.
  static SegmentationMap load(const std::filesystem::path& path);

 private:
  Index height_;
  Index width_;
  std::vector<int> labels_;
  int ignore_;
};

}  // namespace sevot
