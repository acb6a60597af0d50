#include "sevot/io.hpp"

#include <fstream>
#include <sstream>

namespace sevot::io {

namespace {

template <typename F>
auto guarded(const std::string& what, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

Eigen::MatrixXd matrix_from_rows(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty()) throw ValidationError(what + " must be a non-empty array");
  const Index r = static_cast<Index>(rows.size());
  const Index c = static_cast<Index>(rows.at(0).size());
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i) {
    const json& row = rows.at(static_cast<size_t>(i));
    if (!row.is_array() || static_cast<Index>(row.size()) != c) {
      throw ValidationError(what + ": row " + std::to_string(i) + " has the wrong length");
    }
    for (Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<size_t>(j)).get<double>();
  }
  return m;
}

json rows_of(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(origin + ": malformed JSON: " + e.what());
  }
}

json load_json(const std::filesystem::path& path) {
  return parse_json(read_text(path), path.string());
}

GroundMatrix<double> ground_matrix_from_json(const json& j) {
  return guarded("ground matrix", [&] {
    Eigen::MatrixXd entries = matrix_from_rows(j.at("entries"), "entries");
    if (j.contains("n") && j.at("n").get<Index>() != entries.rows()) {
      throw ValidationError("ground matrix: n = " + std::to_string(j.at("n").get<Index>()) +
                            " but entries has " + std::to_string(entries.rows()) + " rows");
    }
    std::vector<std::string> names;
    if (j.contains("class_names")) names = j.at("class_names").get<std::vector<std::string>>();
    return GroundMatrix<double>(std::move(entries), std::move(names));
  });
}

json to_json(const GroundMatrix<double>& d) {
  return json{{"n", d.size()}, {"class_names", d.class_names()}, {"entries", rows_of(d.entries())}};
}

GroundMatrix<double> load_ground_matrix(const std::filesystem::path& path) {
  return ground_matrix_from_json(load_json(path));
}

ImportanceGrouping grouping_from_json(const json& j) {
  return guarded("grouping", [&] {
    std::vector<std::string> names;
    std::vector<int> groups;
    for (const json& c : j.at("classes")) {
      names.push_back(c.at("name").get<std::string>());
      groups.push_back(c.at("group").get<int>());
    }
    std::map<int, double> weights;
    for (const auto& [key, value] : j.at("weights").items()) {
      size_t used = 0;
      int group = 0;
      try {
        group = std::stoi(key, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != key.size()) throw ValidationError("grouping: bad group id '" + key + "'");
      weights[group] = value.get<double>();
    }
    return ImportanceGrouping(std::move(names), std::move(groups), std::move(weights));
  });
}

json to_json(const ImportanceGrouping& grouping) {
  json classes = json::array();
  for (Index c = 0; c < grouping.num_classes(); ++c) {
    classes.push_back({{"name", grouping.class_names()[static_cast<size_t>(c)]},
                       {"group", grouping.group_of(c)}});
  }
  json weights = json::object();
  for (const auto& [g, w] : grouping.weights()) weights[std::to_string(g)] = w;
  return json{{"classes", classes}, {"weights", weights}};
}

ImportanceGrouping load_grouping(const std::filesystem::path& path) {
  return grouping_from_json(load_json(path));
}

json to_json(const LossResult<double>& result) {
  json j;
  j["loss"] = result.loss;
  j["iterations"] = result.iterations ? json(*result.iterations) : json(nullptr);
  j["marginal_residual"] = optional_number(result.marginal_residual);
  return j;
}

SoftmaxModel model_from_json(const json& j) {
  return guarded("model", [&] {
    Eigen::MatrixXd w = matrix_from_rows(j.at("weights"), "weights");
    const auto b = j.at("bias").get<std::vector<double>>();
    Eigen::VectorXd bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Index>(b.size()));
    return SoftmaxModel(std::move(w), std::move(bias));
  });
}

json to_json(const SoftmaxModel& model) {
  return json{{"weights", rows_of(model.weights())},
              {"bias", std::vector<double>(model.bias().data(),
                                           model.bias().data() + model.bias().size())}};
}

PixelDataset dataset_from_json(const json& j) {
  return guarded("dataset", [&] {
    PixelDataset data;
    data.features = matrix_from_rows(j.at("features"), "features");
    data.labels = j.at("labels").get<std::vector<int>>();
    data.num_classes = j.at("num_classes").get<Index>();
    const std::string split = j.value("split", std::string("train"));
    if (split == "train") {
      data.split = Split::train;
    } else if (split == "val") {
      data.split = Split::val;
    } else if (split == "test") {
      data.split = Split::test;
    } else {
      throw ValidationError("dataset: unknown split '" + split + "'");
    }
    data.validate();
    return data;
  });
}

json to_json(const PixelDataset& data) {
  return json{{"num_classes", data.num_classes},
              {"split", to_string(data.split)},
              {"features", rows_of(data.features)},
              {"labels", data.labels}};
}

SyntheticSceneConfig scene_from_json(const json& j) {
  return guarded("scene", [&] {
    SyntheticSceneConfig cfg;
    if (j.contains("preset")) {
      const std::string preset = j.at("preset").get<std::string>();
      if (preset != "overlapping_three_class") {
        throw ValidationError("scene: unknown preset '" + preset + "'");
      }
      cfg = SyntheticSceneConfig::overlapping_three_class(0);
    } else {
      cfg.means = matrix_from_rows(j.at("means"), "means");
      cfg.num_classes = cfg.means.rows();
      cfg.feature_dim = cfg.means.cols();
      cfg.noise_scale = j.at("noise_scale").get<double>();
      cfg.frequencies = j.at("frequencies").get<std::vector<double>>();
    }
    cfg.train_pixels = j.value("train_pixels", cfg.train_pixels);
    cfg.val_pixels = j.value("val_pixels", cfg.val_pixels);
    cfg.test_pixels = j.value("test_pixels", cfg.test_pixels);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.validate();
    return cfg;
  });
}

LossSpec loss_spec_from_json(const json& j, const std::filesystem::path& base_dir) {
  return guarded("loss", [&] {
    if (j.is_string()) {
      const std::string kind = j.get<std::string>();
      if (kind == "ce") return LossSpec::cross_entropy();
      if (kind == "l1") return LossSpec::l1();
      throw ValidationError("loss '" + kind + "' needs an object with a matrix");
    }
    const std::string kind = j.at("kind").get<std::string>();
    auto matrix = [&]() -> GroundMatrix<double> {
      if (j.contains("matrix")) {
        const json& m = j.at("matrix");
        if (m.is_string()) return load_ground_matrix(resolve(base_dir, m.get<std::string>()));
        return ground_matrix_from_json(m);
      }
      if (j.contains("grouping")) {
        const json& g = j.at("grouping");
        if (g.is_string()) {
          return build_group_matrix<double>(load_grouping(resolve(base_dir, g.get<std::string>())));
        }
        return build_group_matrix<double>(grouping_from_json(g));
      }
      throw ValidationError("loss '" + kind + "' needs \"matrix\" or \"grouping\"");
    };
    const double smoothing = j.value("smoothing", 0.0);
    LossSpec spec;
    if (kind == "ce") {
      spec = LossSpec::cross_entropy();
    } else if (kind == "l1") {
      spec = LossSpec::l1(smoothing);
    } else if (kind == "wasserstein") {
      spec = LossSpec::wasserstein(matrix(), MetricFn::parse(j.value("metric", "identity")));
    } else if (kind == "sinkhorn") {
      spec = LossSpec::sinkhorn(matrix(), j.value("epsilon", 0.1), smoothing);
      spec.metric = MetricFn::parse(j.value("metric", "identity"));
      spec.sinkhorn_max_iter = j.value("max_iter", 1000);
    } else {
      throw ValidationError("unknown loss kind '" + kind + "'");
    }
    return spec;
  });
}

TrainConfig train_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  return guarded("train config", [&] {
    TrainConfig cfg;
    if (j.contains("loss")) cfg.loss = loss_spec_from_json(j.at("loss"), base_dir);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.validate();
    return cfg;
  });
}

json to_json(const EpochStats& stats) {
  return json{{"epoch", stats.epoch},
              {"train_loss", stats.train_loss},
              {"val_loss", stats.val_loss},
              {"val_accuracy", stats.val_accuracy},
              {"val_miou", optional_number(stats.val_miou)},
              {"val_severity_error", stats.val_severity_error}};
}

json to_json(const EvalReport& report) {
  json conf = json::array();
  for (Index t = 0; t < report.confusion.num_classes(); ++t) {
    json row = json::array();
    for (Index p = 0; p < report.confusion.num_classes(); ++p) row.push_back(report.confusion(t, p));
    conf.push_back(std::move(row));
  }
  json ious = json::array();
  for (const auto& v : report.iou) ious.push_back(optional_number(v));
  json groups = json::object();
  for (const auto& [g, v] : report.group_iou) groups[std::to_string(g)] = optional_number(v);
  return json{{"class_names", report.class_names},
              {"confusion", conf},
              {"iou", ious},
              {"miou", optional_number(report.miou)},
              {"group_iou", groups},
              {"accuracy", report.accuracy},
              {"severity_error", report.severity_error}};
}

}  // namespace sevot::io
