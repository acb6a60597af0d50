#include "sevot/labels.hpp"

#include "sevot/io.hpp"

#include <sstream>

namespace sevot {

SegmentationMap::SegmentationMap(Index height, Index width, std::vector<int> labels,
                                 int ignore_value)
    : height_(height), width_(width), labels_(std::move(labels)), ignore_(ignore_value) {
  if (height <= 0 || width <= 0) {
    throw ValidationError("segmentation map dimensions must be positive");
  }
  if (static_cast<Index>(labels_.size()) != height * width) {
    throw SizeError("segmentation map expects " + std::to_string(height * width) +
                    " labels, got " + std::to_string(labels_.size()));
  }
}

void SegmentationMap::check_classes(Index num_classes) const {
  std::vector<std::string> bad;
  for (size_t p = 0; p < labels_.size(); ++p) {
    const int v = labels_[p];
    if (v == ignore_) continue;
    if (v < 0 || v >= num_classes) {
      bad.push_back("pixel " + std::to_string(p) + ": label " + std::to_string(v));
      if (bad.size() >= 20) break;
    }
  }
  if (!bad.empty()) {
    throw ValidationError("segmentation labels outside [0, " + std::to_string(num_classes) + ")",
                          std::move(bad));
  }
}

SegmentationMap SegmentationMap::from_json_text(const std::string& text) {
  const io::json j = io::parse_json(text, "segmentation map");
  try {
    return SegmentationMap(j.at("height").get<Index>(), j.at("width").get<Index>(),
                           j.at("labels").get<std::vector<int>>(),
                           j.value("ignore_value", kDefaultIgnore));
  } catch (const io::json::exception& e) {
    throw ValidationError(std::string("segmentation map: ") + e.what());
  }
}

std::string SegmentationMap::to_json_text() const {
  io::json j;
  j["height"] = height_;
  j["width"] = width_;
  j["ignore_value"] = ignore_;
  j["labels"] = labels_;
  return j.dump();
}

SegmentationMap SegmentationMap::from_csv_text(const std::string& text, int ignore_value) {
  std::vector<int> labels;
  Index height = 0;
  Index width = -1;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t' || c == '\r') c = ' ';
    }
    std::istringstream cells(line);
    Index count = 0;
    std::string cell;
    while (cells >> cell) {
      size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size()) {
        throw ValidationError("segmentation csv: bad cell '" + cell + "' on row " +
                              std::to_string(height + 1));
      }
      labels.push_back(v);
      ++count;
    }
    if (count == 0) continue;
    if (width >= 0 && count != width) {
      throw ValidationError("segmentation csv: row " + std::to_string(height + 1) + " has " +
                            std::to_string(count) + " cells, expected " + std::to_string(width));
    }
    width = count;
    ++height;
  }
  if (height == 0) throw ValidationError("segmentation csv is empty");
  return SegmentationMap(height, width, std::move(labels), ignore_value);
}

SegmentationMap SegmentationMap::load(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  if (path.extension() == ".csv") return from_csv_text(text);
  return from_json_text(text);
}

}  // namespace sevot
