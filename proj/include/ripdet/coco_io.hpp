#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ripdet/error.hpp"
#include "ripdet/geometry.hpp"

namespace ripdet {

using Json = nlohmann::json;

enum class Task { kDetection, kSegmentation };

std::string_view task_name(Task task);  // "det" / "seg"
Task parse_task(std::string_view name);  // accepts det|detection|seg|segmentation

struct ImageRecord {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Category {
  std::int64_t id = 0;
  std::string name;

  friend bool operator==(const Category&, const Category&) = default;
};

struct GroundTruthInstance {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  BBox bbox;
  PolygonSet segmentation;

  friend bool operator==(const GroundTruthInstance&, const GroundTruthInstance&) = default;
};

// Ground truth: image registry, annotations in file order, and the single
// category. Immutable once loaded.
class Dataset {
 public:
  Dataset() = default;
  // Checks the cross-record invariants and throws Error on violation.
  Dataset(std::vector<ImageRecord> images, std::vector<GroundTruthInstance> annotations,
          Category category);

  const std::vector<ImageRecord>& images() const { return images_; }
  const std::vector<GroundTruthInstance>& annotations() const { return annotations_; }
  const Category& category() const { return category_; }

  const ImageRecord* find_image(std::int64_t id) const;
  // Index into images() for a known image id.
  std::optional<std::size_t> image_index(std::int64_t id) const;
  // Annotation indices grouped by image position in images().
  const std::vector<std::vector<std::size_t>>& annotations_by_image() const {
    return by_image_;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.images_ == b.images_ && a.annotations_ == b.annotations_ &&
           a.category_ == b.category_;
  }

 private:
  std::vector<ImageRecord> images_;
  std::vector<GroundTruthInstance> annotations_;
  Category category_;
  std::unordered_map<std::int64_t, std::size_t> index_;
  std::vector<std::vector<std::size_t>> by_image_;
};

using Payload = std::variant<BBox, PolygonSet>;

struct PredictionInstance {
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  double score = 0.0;
  Payload payload;
  // Position in the source array; the final sort tie-break.
  std::size_t input_index = 0;

  const BBox* box() const { return std::get_if<BBox>(&payload); }
  const PolygonSet* polygon() const { return std::get_if<PolygonSet>(&payload); }

  friend bool operator==(const PredictionInstance&, const PredictionInstance&) = default;
};

struct PredictionSet {
  Task task = Task::kDetection;
  std::vector<PredictionInstance> instances;

  // Orders by (image_id, descending score, input_index).
  void sort();

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

struct Issue {
  ErrorCode code;
  std::string message;
  std::string location;
  // Set for per-instance issues; file-level issues have none.
  std::optional<std::size_t> instance;
};

struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;
  std::size_t images_seen = 0;
  std::size_t instances_seen = 0;
  std::size_t instances_dropped = 0;

  bool ok() const { return errors.empty(); }
  // Errors that lenient mode cannot recover from by dropping instances.
  bool has_file_level_errors() const;
};

struct PredictionOptions {
  bool lenient = false;
  // 0 keeps every instance.
  std::size_t max_per_image = 0;
};

struct PredictionLoad {
  PredictionSet predictions;  // only instances free of errors, sorted
  ValidationReport report;
};

Dataset parse_ground_truth(const Json& doc);
Dataset load_ground_truth(const std::filesystem::path& path);

// Parses and checks a result array, collecting every issue instead of
// throwing. Never throws for content problems.
PredictionLoad inspect_predictions(const Json& doc, const Dataset& dataset, Task task,
                                   const PredictionOptions& options = {});

// Strict mode throws the first error; lenient mode drops offending instances.
// Malformed JSON and file-level problems throw in both modes.
PredictionSet parse_predictions(const Json& doc, const Dataset& dataset, Task task,
                                const PredictionOptions& options = {});
PredictionSet load_predictions(const std::filesystem::path& path, const Dataset& dataset,
                               Task task, const PredictionOptions& options = {});

// Re-checks an in-memory prediction set (e.g. pipeline output) against the
// dataset. instances_dropped counts instances carrying errors.
ValidationReport validate_predictions(const PredictionSet& preds, const Dataset& dataset);

Json serialize_ground_truth(const Dataset& dataset);
Json serialize_predictions(const PredictionSet& preds);
Json serialize_report(const ValidationReport& report);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ripdet
