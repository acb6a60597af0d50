#include "sevot/ground_metric.hpp"

#include <charconv>
#include <set>

namespace sevot {

ImportanceGrouping::ImportanceGrouping(std::vector<std::string> class_names,
                                       std::vector<int> group_of, std::map<int, double> weight_of)
    : class_names_(std::move(class_names)),
      group_of_(std::move(group_of)),
      weight_of_(std::move(weight_of)) {
  auto problems = violations(class_names_, group_of_, weight_of_);
  if (!problems.empty()) throw ValidationError("invalid importance grouping", std::move(problems));
}

ImportanceGrouping ImportanceGrouping::from_groups(const std::vector<int>& group_of,
                                                   std::map<int, double> weight_of) {
  std::vector<std::string> names;
  for (size_t i = 0; i < group_of.size(); ++i) names.push_back("class" + std::to_string(i));
  return ImportanceGrouping(std::move(names), group_of, std::move(weight_of));
}

std::vector<std::string> ImportanceGrouping::violations(const std::vector<std::string>& names,
                                                        const std::vector<int>& group_of,
                                                        const std::map<int, double>& weight_of) {
  std::vector<std::string> problems;
  if (group_of.size() < 2) {
    problems.push_back("need at least 2 classes, got " + std::to_string(group_of.size()));
  }
  if (names.size() != group_of.size()) {
    problems.push_back(std::to_string(names.size()) + " class names for " +
                       std::to_string(group_of.size()) + " classes");
  }
  for (size_t i = 0; i < group_of.size(); ++i) {
    if (!weight_of.contains(group_of[i])) {
      const std::string name = i < names.size() ? names[i] : "class" + std::to_string(i);
      problems.push_back("class " + std::to_string(i) + " (" + name + "): group " +
                         std::to_string(group_of[i]) + " has no weight");
    }
  }
  bool any_positive = false;
  for (const auto& [group, weight] : weight_of) {
    if (!std::isfinite(weight) || weight < 0.0) {
      problems.push_back("group " + std::to_string(group) + ": weight " + std::to_string(weight) +
                         " is negative or non-finite");
    }
    any_positive = any_positive || weight > 0.0;
  }
  if (!any_positive) problems.push_back("no group has a positive weight");
  return problems;
}

std::vector<int> ImportanceGrouping::groups() const {
  const std::set<int> unique(group_of_.begin(), group_of_.end());
  return {unique.begin(), unique.end()};
}

std::vector<Index> ImportanceGrouping::classes_in(int group) const {
  std::vector<Index> members;
  for (size_t i = 0; i < group_of_.size(); ++i) {
    if (group_of_[i] == group) members.push_back(static_cast<Index>(i));
  }
  return members;
}

std::string MatrixViolation::describe() const {
  const std::string cell = "(" + std::to_string(row) + "," + std::to_string(col) + ")";
  switch (kind) {
    case Kind::not_square:
      return "matrix is " + std::to_string(row) + "x" + std::to_string(col) + ", not square";
    case Kind::non_finite:
      return "non-finite entry at " + cell;
    case Kind::negative:
      return "negative entry " + std::to_string(value) + " at " + cell;
    case Kind::nonzero_diagonal:
      return "nonzero diagonal " + std::to_string(value) + " at " + cell;
  }
  return "unknown violation";
}

std::vector<std::string> MatrixValidation::describe() const {
  std::vector<std::string> lines;
  lines.reserve(violations.size());
  for (const auto& v : violations) lines.push_back(v.describe());
  return lines;
}

MetricFn MetricFn::power(double rho) {
  if (!(rho >= 1.0) || !std::isfinite(rho)) {
    throw ValidationError("power metric needs rho >= 1, got " + std::to_string(rho));
  }
  return MetricFn(Kind::power, rho);
}

MetricFn MetricFn::huber(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ValidationError("huber metric needs tau > 0, got " + std::to_string(tau));
  }
  return MetricFn(Kind::huber, tau);
}

MetricFn MetricFn::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  double param = 0.0;
  if (colon != std::string_view::npos) {
    const std::string_view arg = text.substr(colon + 1);
    const auto [end, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), param);
    if (ec != std::errc() || end != arg.data() + arg.size()) {
      throw ValidationError("bad metric parameter in '" + std::string(text) + "'");
    }
  }
  const bool has_param = colon != std::string_view::npos;
  if (name == "identity" && !has_param) return identity();
  if (name == "step" && !has_param) return step();
  if (name == "power" && has_param) return power(param);
  if (name == "huber" && has_param) return huber(param);
  throw ValidationError("unknown metric '" + std::string(text) +
                        "' (expected identity, power:<rho>, huber:<tau> or step)");
}

std::string MetricFn::to_string() const {
  auto fmt = [](double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  };
  switch (kind_) {
    case Kind::identity:
      return "identity";
    case Kind::power:
      return "power:" + fmt(param_);
    case Kind::huber:
      return "huber:" + fmt(param_);
    case Kind::step:
      return "step";
  }
  return "identity";
}

ImportanceGrouping cityscapes_grouping(std::map<int, double> weights) {
  // 19 evaluation classes in the usual Cityscapes order.
  std::vector<std::string> names = {"road",   "sidewalk",   "building",     "wall",
                                    "fence",  "pole",       "traffic_light", "traffic_sign",
                                    "vegetation", "terrain", "sky",         "person",
                                    "rider",  "car",        "truck",        "bus",
                                    "train",  "motorcycle", "bicycle"};
  std::vector<int> groups = {3, 3, 2, 2, 2, 3, 3, 3, 2, 2, 1, 4, 4, 4, 4, 4, 3, 4, 4};
  return ImportanceGrouping(std::move(names), std::move(groups), std::move(weights));
}

}  // namespace sevot
