#include "sevot/metrics.hpp"

#include "sevot/io.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace sevot {

ConfusionMatrix::ConfusionMatrix(Index num_classes) : counts_(Counts::Zero(num_classes, num_classes)) {
  if (num_classes < 2) throw ValidationError("confusion matrix needs at least 2 classes");
}

ConfusionMatrix::ConfusionMatrix(Counts counts) : counts_(std::move(counts)) {
  if (counts_.rows() != counts_.cols() || counts_.rows() < 2) {
    throw ValidationError("confusion matrix must be square with at least 2 classes");
  }
  if ((counts_.array() < 0).any()) throw ValidationError("confusion counts must be nonnegative");
}

void ConfusionMatrix::add(Index truth, Index pred, std::int64_t count) {
  check_index(truth, num_classes(), "truth label");
  check_index(pred, num_classes(), "predicted label");
  if (count < 0) throw ValidationError("confusion counts must be nonnegative");
  counts_(truth, pred) += count;
}

double ConfusionMatrix::accuracy() const {
  const std::int64_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(counts_.trace()) / static_cast<double>(n);
}

bool ConfusionMatrix::is_diagonal() const {
  for (Index j = 0; j < num_classes(); ++j) {
    for (Index i = 0; i < num_classes(); ++i) {
      if (i != j && counts_(i, j) != 0) return false;
    }
  }
  return true;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.num_classes() != num_classes()) throw SizeError("confusion matrices differ in size");
  counts_ += other.counts_;
  return *this;
}

ConfusionMatrix accumulate_confusion(std::span<const int> preds, std::span<const int> truths,
                                     Index num_classes, int ignore_value) {
  if (preds.size() != truths.size()) {
    throw SizeError("prediction and truth pixel counts differ (" + std::to_string(preds.size()) +
                    " vs " + std::to_string(truths.size()) + ")");
  }
  ConfusionMatrix conf(num_classes);
  for (size_t p = 0; p < truths.size(); ++p) {
    if (truths[p] == ignore_value) continue;
    conf.add(truths[p], preds[p]);
  }
  return conf;
}

ConfusionMatrix accumulate_confusion(const SegmentationMap& preds, const SegmentationMap& truths,
                                     Index num_classes) {
  if (preds.height() != truths.height() || preds.width() != truths.width()) {
    throw SizeError("prediction map is " + std::to_string(preds.height()) + "x" +
                    std::to_string(preds.width()) + ", truth map is " +
                    std::to_string(truths.height()) + "x" + std::to_string(truths.width()));
  }
  truths.check_classes(num_classes);
  ConfusionMatrix conf(num_classes);
  for (Index p = 0; p < truths.num_pixels(); ++p) {
    // A pixel is scored only when the truth is known.
    if (truths.ignored(p)) continue;
    const int pred = preds.labels()[static_cast<size_t>(p)];
    if (preds.ignored(p)) {
      throw ValidationError("prediction map has an ignore marker at scored pixel " +
                            std::to_string(p));
    }
    conf.add(truths.labels()[static_cast<size_t>(p)], pred);
  }
  return conf;
}

ClassIou iou_per_class(const ConfusionMatrix& conf) {
  ClassIou ious(static_cast<size_t>(conf.num_classes()));
  for (Index c = 0; c < conf.num_classes(); ++c) {
    const std::int64_t tp = conf.true_positives(c);
    const std::int64_t denom = tp + conf.false_positives(c) + conf.false_negatives(c);
    if (denom > 0) ious[static_cast<size_t>(c)] = static_cast<double>(tp) / static_cast<double>(denom);
  }
  return ious;
}

std::optional<double> mean_iou(const ClassIou& ious) {
  double sum = 0.0;
  int count = 0;
  for (const auto& v : ious) {
    if (!v) continue;
    sum += *v;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

std::map<int, std::optional<double>> group_iou(const ClassIou& ious,
                                               const ImportanceGrouping& grouping) {
  if (static_cast<Index>(ious.size()) != grouping.num_classes()) {
    throw SizeError("grouping covers " + std::to_string(grouping.num_classes()) +
                    " classes but IoU has " + std::to_string(ious.size()));
  }
  std::map<int, std::optional<double>> out;
  for (int g : grouping.groups()) {
    ClassIou members;
    for (Index c : grouping.classes_in(g)) members.push_back(ious[static_cast<size_t>(c)]);
    out[g] = mean_iou(members);
  }
  return out;
}

double severity_weighted_error(const ConfusionMatrix& conf, const GroundMatrix<double>& d) {
  if (conf.num_classes() != d.size()) {
    throw SizeError("confusion has " + std::to_string(conf.num_classes()) +
                    " classes, ground matrix " + std::to_string(d.size()));
  }
  const std::int64_t n = conf.total();
  if (n == 0) return 0.0;
  double cost = 0.0;
  for (Index t = 0; t < conf.num_classes(); ++t) {
    for (Index p = 0; p < conf.num_classes(); ++p) {
      cost += static_cast<double>(conf(t, p)) * d(p, t);
    }
  }
  return cost / static_cast<double>(n);
}

EvalReport make_report(const ConfusionMatrix& conf, const GroundMatrix<double>& d,
                       const ImportanceGrouping* grouping) {
  EvalReport report{conf, iou_per_class(conf), std::nullopt, {}, 0.0, conf.accuracy(), {}, {}};
  report.miou = mean_iou(report.iou);
  report.severity_error = severity_weighted_error(conf, d);
  report.class_names = d.class_names();
  if (grouping != nullptr) {
    report.group_iou = group_iou(report.iou, *grouping);
    report.class_names = grouping->class_names();
    for (Index c = 0; c < grouping->num_classes(); ++c) {
      report.class_group.push_back(grouping->group_of(c));
    }
  }
  return report;
}

std::string EvalReport::to_json_text(int indent) const { return io::to_json(*this).dump(indent); }

namespace {

std::string percent(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << 100.0 * *v;
  return os.str();
}

}  // namespace

std::string EvalReport::to_table() const {
  const size_t n = iou.size();
  std::vector<size_t> order(n);
  for (size_t c = 0; c < n; ++c) order[c] = c;
  // Group columns together, most important group first.
  if (!class_group.empty()) {
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return class_group[a] > class_group[b];
    });
  }

  std::vector<std::string> header;
  std::vector<std::string> names;
  std::vector<std::string> values;
  for (size_t c : order) {
    header.push_back(class_group.empty() ? "" : "Group" + std::to_string(class_group[c]));
    names.push_back(c < class_names.size() ? class_names[c] : "class" + std::to_string(c));
    values.push_back(percent(iou[c]));
  }
  header.push_back("");
  names.push_back("mIoU");
  values.push_back(percent(miou));
  header.push_back("");
  names.push_back("severity");
  {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << severity_error;
    values.push_back(os.str());
  }

  std::vector<size_t> width(names.size());
  for (size_t k = 0; k < names.size(); ++k) {
    width[k] = std::max({header[k].size(), names[k].size(), values[k].size()});
  }
  auto row = [&](const std::vector<std::string>& cells) {
    std::ostringstream os;
    os << "|";
    for (size_t k = 0; k < cells.size(); ++k) {
      os << ' ' << std::setw(static_cast<int>(width[k])) << cells[k] << " |";
    }
    return os.str();
  };
  std::string out;
  if (!class_group.empty()) {
    // Blank repeated group labels so each group heads its span once.
    std::vector<std::string> spans = header;
    for (size_t k = spans.size(); k-- > 1;) {
      if (!spans[k].empty() && spans[k] == spans[k - 1]) spans[k].clear();
    }
    out += row(spans) + "\n";
  }
  out += row(names) + "\n";
  out += row(values) + "\n";
  if (!group_iou.empty()) {
    std::ostringstream os;
    os << "group IoU:";
    for (auto it = group_iou.rbegin(); it != group_iou.rend(); ++it) {
      os << " Group" << it->first << '=' << percent(it->second);
    }
    out += os.str() + "\n";
  }
  return out;
}

}  // namespace sevot
