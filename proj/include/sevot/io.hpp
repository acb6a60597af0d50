#pragma once

// JSON / CSV / JSONL file formats. Parse failures and invariant violations
// surface as ValidationError.

#include "sevot/ground_metric.hpp"
#include "sevot/metrics.hpp"
#include "sevot/trainer.hpp"
#include "sevot/transport.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace sevot::io {

using json = nlohmann::json;

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
json parse_json(const std::string& text, const std::string& origin = "input");
json load_json(const std::filesystem::path& path);

// {"n", "class_names", "entries"} row-major.
GroundMatrix<double> ground_matrix_from_json(const json& j);
json to_json(const GroundMatrix<double>& d);
GroundMatrix<double> load_ground_matrix(const std::filesystem::path& path);

// {"classes": [{"name", "group"}], "weights": {"<group>": weight}}.
ImportanceGrouping grouping_from_json(const json& j);
json to_json(const ImportanceGrouping& grouping);
ImportanceGrouping load_grouping(const std::filesystem::path& path);

// {"loss", "iterations", "marginal_residual"}; absent fields are null.
json to_json(const LossResult<double>& result);

// {"weights": [[...]], "bias": [...]}.
SoftmaxModel model_from_json(const json& j);
json to_json(const SoftmaxModel& model);

// {"num_classes", "split", "features": [[...]], "labels": [...]}.
PixelDataset dataset_from_json(const json& j);
json to_json(const PixelDataset& data);

SyntheticSceneConfig scene_from_json(const json& j);

// {"kind": "ce" | "wasserstein" | "l1" | "sinkhorn", "matrix": <path or
// inline matrix>, "metric": "power:2", "epsilon", "smoothing", "max_iter"}.
// Relative matrix paths resolve against `base_dir`.
LossSpec loss_spec_from_json(const json& j, const std::filesystem::path& base_dir);

TrainConfig train_config_from_json(const json& j, const std::filesystem::path& base_dir);

json to_json(const EpochStats& stats);
json to_json(const EvalReport& report);

}  // namespace sevot::io
