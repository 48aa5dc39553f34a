#include "ripdet/coco_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

namespace ripdet {

namespace {

std::string image_loc(std::int64_t id) { return "images[id=" + std::to_string(id) + "]"; }
std::string annotation_loc(std::int64_t id) {
  return "annotation " + std::to_string(id);
}
std::string prediction_loc(std::size_t index) {
  return "predictions[" + std::to_string(index) + "]";
}

const Json& require_field(const Json& obj, const char* name, const std::string& where) {
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw Error(ErrorCode::kMissingField, where + ": missing field '" + name + "'");
  }
  return *it;
}

std::int64_t require_int(const Json& obj, const char* name, const std::string& where) {
  const Json& v = require_field(obj, name, where);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kMalformedJson,
                where + ": field '" + name + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

double require_number(const Json& obj, const char* name, const std::string& where) {
  const Json& v = require_field(obj, name, where);
  if (!v.is_number()) {
    throw Error(ErrorCode::kMalformedJson, where + ": field '" + name + "' must be a number");
  }
  return v.get<double>();
}

BBox parse_bbox(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4 ||
      !std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_number(); })) {
    throw Error(ErrorCode::kMalformedJson, where + ": bbox must be [x, y, w, h]");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
}

// Structural parse only; ring-level geometry checks happen separately so the
// prediction path can report them as issues.
PolygonSet parse_polygon(const Json& v, const std::string& where) {
  if (v.is_object()) {
    throw Error(ErrorCode::kRleUnsupported,
                where + ": RLE segmentation is not supported, use polygons");
  }
  if (!v.is_array()) {
    throw Error(ErrorCode::kMalformedJson, where + ": segmentation must be a list of rings");
  }
  PolygonSet poly;
  for (const Json& ring_json : v) {
    if (!ring_json.is_array()) {
      throw Error(ErrorCode::kMalformedJson,
                  where + ": each ring must be a flat coordinate list");
    }
    if (ring_json.size() % 2 != 0) {
      throw Error(ErrorCode::kInvalidPolygon,
                  where + ": ring has an odd number of coordinates");
    }
    Ring ring;
    for (std::size_t k = 0; k < ring_json.size(); k += 2) {
      if (!ring_json[k].is_number() || !ring_json[k + 1].is_number()) {
        throw Error(ErrorCode::kMalformedJson, where + ": ring coordinates must be numbers");
      }
      ring.push_back({ring_json[k].get<double>(), ring_json[k + 1].get<double>()});
    }
    poly.rings.push_back(std::move(ring));
  }
  return poly;
}

// PolygonSet invariants: rings of >= 3 finite vertices, some ring with area.
void check_polygon(const PolygonSet& poly, const std::string& where) {
  if (poly.rings.empty()) {
    throw Error(ErrorCode::kDegenerateRing, where + ": segmentation has no rings");
  }
  bool any_area = false;
  for (const Ring& ring : poly.rings) {
    if (ring.size() < 3) {
      throw Error(ErrorCode::kDegenerateRing,
                  where + ": ring has " + std::to_string(ring.size()) +
                      " vertices, at least 3 required");
    }
    for (const Point& p : ring) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw Error(ErrorCode::kInvalidPolygon, where + ": non-finite ring coordinate");
      }
    }
    any_area = any_area || polygon_area(ring) > 0.0;
  }
  if (!any_area) {
    throw Error(ErrorCode::kDegenerateRing, where + ": every ring has zero area");
  }
}

void check_box_shape(const BBox& b, const std::string& where) {
  const bool finite = std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
                      std::isfinite(b.h);
  if (!finite || !(b.w > 0.0) || !(b.h > 0.0)) {
    throw Error(ErrorCode::kDegenerateBox, where + ": box must have positive width and height");
  }
}

struct InstanceIssues {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;
};

void add_error(InstanceIssues& out, const Error& e, const std::string& where,
               std::size_t index) {
  out.errors.push_back({e.code(), e.what(), where, index});
}

// Payload checks against the owning image, shared by parsing and validation.
void check_payload(const Payload& payload, const ImageRecord& image,
                   const std::string& where, std::size_t index, InstanceIssues& out) {
  try {
    if (const BBox* b = std::get_if<BBox>(&payload)) {
      check_box_shape(*b, where);
      const BBox frame{0.0, 0.0, static_cast<double>(image.width),
                       static_cast<double>(image.height)};
      if (box_intersection(*b, frame) <= 0.0) {
        throw Error(ErrorCode::kBoxOutOfImage, where + ": box lies entirely outside image " +
                                                   std::to_string(image.id));
      }
      if (b->x < 0.0 || b->y < 0.0 || b->right() > frame.w || b->bottom() > frame.h) {
        out.warnings.push_back({ErrorCode::kBoxOverhang,
                                where + ": box extends past the edge of image " +
                                    std::to_string(image.id),
                                where, index});
      }
    } else {
      const PolygonSet& poly = std::get<PolygonSet>(payload);
      check_polygon(poly, where);
      if (rasterize(poly, image.width, image.height).empty()) {
        throw Error(ErrorCode::kDegenerateMask,
                    where + ": polygon covers no pixel of image " + std::to_string(image.id));
      }
    }
  } catch (const Error& e) {
    add_error(out, e, where, index);
  }
}

void check_score(double score, const std::string& where, std::size_t index,
                 InstanceIssues& out) {
  if (!std::isfinite(score) || score < 0.0 || score > 1.0) {
    std::ostringstream msg;
    msg << where << ": score " << score << " outside [0, 1]";
    out.errors.push_back({ErrorCode::kScoreOutOfRange, msg.str(), where, index});
  }
}

Json issue_json(const Issue& issue) {
  Json j = {{"code", std::string(error_code_name(issue.code))},
            {"message", issue.message},
            {"location", issue.location}};
  if (issue.instance) j["instance"] = *issue.instance;
  return j;
}

Json ring_json(const Ring& ring) {
  Json flat = Json::array();
  for (const Point& p : ring) {
    flat.push_back(p.x);
    flat.push_back(p.y);
  }
  return flat;
}

Json polygon_json(const PolygonSet& poly) {
  Json rings = Json::array();
  for (const Ring& ring : poly.rings) rings.push_back(ring_json(ring));
  return rings;
}

Json bbox_json(const BBox& b) { return Json::array({b.x, b.y, b.w, b.h}); }

}  // namespace

std::string_view task_name(Task task) {
  return task == Task::kDetection ? "det" : "seg";
}

Task parse_task(std::string_view name) {
  if (name == "det" || name == "detection" || name == "bbox") return Task::kDetection;
  if (name == "seg" || name == "segmentation" || name == "segm") return Task::kSegmentation;
  throw Error(ErrorCode::kInvalidArgument, "unknown task '" + std::string(name) + "'");
}

Dataset::Dataset(std::vector<ImageRecord> images,
                 std::vector<GroundTruthInstance> annotations, Category category)
    : images_(std::move(images)),
      annotations_(std::move(annotations)),
      category_(std::move(category)) {
  for (std::size_t i = 0; i < images_.size(); ++i) {
    const ImageRecord& img = images_[i];
    if (img.width < 1 || img.height < 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  image_loc(img.id) + ": width and height must be >= 1");
    }
    if (!index_.emplace(img.id, i).second) {
      throw Error(ErrorCode::kDuplicateImageId,
                  "duplicate image id " + std::to_string(img.id));
    }
  }
  by_image_.resize(images_.size());
  for (std::size_t a = 0; a < annotations_.size(); ++a) {
    const GroundTruthInstance& gt = annotations_[a];
    auto it = index_.find(gt.image_id);
    if (it == index_.end()) {
      throw Error(ErrorCode::kUnknownImageRef,
                  annotation_loc(gt.id) + ": unknown image_id " + std::to_string(gt.image_id));
    }
    if (gt.category_id != category_.id) {
      throw Error(ErrorCode::kCategoryMismatch,
                  annotation_loc(gt.id) + ": category_id " + std::to_string(gt.category_id) +
                      " differs from dataset category " + std::to_string(category_.id));
    }
    check_box_shape(gt.bbox, annotation_loc(gt.id));
    check_polygon(gt.segmentation, annotation_loc(gt.id));
    by_image_[it->second].push_back(a);
  }
}

const ImageRecord* Dataset::find_image(std::int64_t id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &images_[it->second];
}

std::optional<std::size_t> Dataset::image_index(std::int64_t id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void PredictionSet::sort() {
  std::sort(instances.begin(), instances.end(),
            [](const PredictionInstance& a, const PredictionInstance& b) {
              if (a.image_id != b.image_id) return a.image_id < b.image_id;
              if (a.score != b.score) return a.score > b.score;
              return a.input_index < b.input_index;
            });
}

bool ValidationReport::has_file_level_errors() const {
  return std::any_of(errors.begin(), errors.end(),
                     [](const Issue& i) { return !i.instance.has_value(); });
}

Dataset parse_ground_truth(const Json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::kMalformedJson, "ground truth must be a JSON object");
  }
  for (const char* key : {"images", "annotations", "categories"}) {
    if (!require_field(doc, key, "ground truth").is_array()) {
      throw Error(ErrorCode::kMalformedJson,
                  std::string("ground truth: '") + key + "' must be an array");
    }
  }

  const Json& cats = doc["categories"];
  if (cats.empty()) {
    throw Error(ErrorCode::kMissingField, "ground truth: no category defined");
  }
  if (cats.size() > 1) {
    throw Error(ErrorCode::kMultipleCategories,
                "ground truth: expected exactly one category, found " +
                    std::to_string(cats.size()));
  }
  Category category;
  category.id = require_int(cats[0], "id", "categories[0]");
  if (auto it = cats[0].find("name"); it != cats[0].end() && it->is_string()) {
    category.name = it->get<std::string>();
  }

  std::vector<ImageRecord> images;
  for (const Json& j : doc["images"]) {
    if (!j.is_object()) throw Error(ErrorCode::kMalformedJson, "images: entry is not an object");
    ImageRecord img;
    img.id = require_int(j, "id", "images[]");
    const std::string where = image_loc(img.id);
    img.width = static_cast<int>(require_int(j, "width", where));
    img.height = static_cast<int>(require_int(j, "height", where));
    const Json& name = require_field(j, "file_name", where);
    if (!name.is_string()) {
      throw Error(ErrorCode::kMalformedJson, where + ": file_name must be a string");
    }
    img.file_name = name.get<std::string>();
    images.push_back(std::move(img));
  }

  std::vector<GroundTruthInstance> annotations;
  for (const Json& j : doc["annotations"]) {
    if (!j.is_object()) {
      throw Error(ErrorCode::kMalformedJson, "annotations: entry is not an object");
    }
    GroundTruthInstance gt;
    gt.id = require_int(j, "id", "annotations[]");
    const std::string where = annotation_loc(gt.id);
    gt.image_id = require_int(j, "image_id", where);
    gt.category_id = require_int(j, "category_id", where);
    gt.bbox = parse_bbox(require_field(j, "bbox", where), where);
    gt.segmentation = parse_polygon(require_field(j, "segmentation", where), where);
    annotations.push_back(std::move(gt));
  }
  return Dataset(std::move(images), std::move(annotations), std::move(category));
}

Dataset load_ground_truth(const std::filesystem::path& path) {
  return parse_ground_truth(read_json_file(path));
}

PredictionLoad inspect_predictions(const Json& doc, const Dataset& dataset, Task task,
                                   const PredictionOptions& options) {
  PredictionLoad result;
  result.predictions.task = task;
  ValidationReport& report = result.report;
  if (!doc.is_array()) {
    report.errors.push_back({ErrorCode::kMalformedJson,
                             "prediction file must be a JSON array of results", "file",
                             std::nullopt});
    return result;
  }

  std::set<std::int64_t> images_seen;
  const char* const wanted = task == Task::kDetection ? "bbox" : "segmentation";
  const char* const other = task == Task::kDetection ? "segmentation" : "bbox";
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const Json& j = doc[i];
    const std::string where = prediction_loc(i);
    InstanceIssues issues;
    PredictionInstance inst;
    inst.input_index = i;
    const ImageRecord* image = nullptr;
    try {
      if (!j.is_object()) throw Error(ErrorCode::kMalformedJson, where + ": not an object");
      inst.image_id = require_int(j, "image_id", where);
      images_seen.insert(inst.image_id);
      inst.category_id = require_int(j, "category_id", where);
      inst.score = require_number(j, "score", where);
      check_score(inst.score, where, i, issues);
      image = dataset.find_image(inst.image_id);
      if (image == nullptr) {
        issues.errors.push_back({ErrorCode::kUnknownImageRef,
                                 where + ": unknown image_id " + std::to_string(inst.image_id),
                                 where, i});
      }
      if (inst.category_id != dataset.category().id) {
        issues.errors.push_back(
            {ErrorCode::kCategoryMismatch,
             where + ": category_id " + std::to_string(inst.category_id) +
                 " differs from dataset category " + std::to_string(dataset.category().id),
             where, i});
      }
      const bool has_wanted = j.contains(wanted);
      const bool has_other = j.contains(other);
      if (!has_wanted) {
        throw Error(has_other ? ErrorCode::kWrongPayloadKind : ErrorCode::kMissingField,
                    has_other ? where + ": found '" + other + "' in a " +
                                    std::string(task_name(task)) + " submission"
                              : where + ": missing field '" + wanted + "'");
      }
      if (has_other) {
        issues.warnings.push_back({ErrorCode::kIgnoredPayload,
                                   where + ": ignoring '" + other + "' for " +
                                       std::string(task_name(task)) + " scoring",
                                   where, i});
      }
      if (task == Task::kDetection) {
        inst.payload = parse_bbox(j[wanted], where);
      } else {
        inst.payload = parse_polygon(j[wanted], where);
      }
      if (image != nullptr) check_payload(inst.payload, *image, where, i, issues);
    } catch (const Error& e) {
      add_error(issues, e, where, i);
    }

    ++report.instances_seen;
    for (Issue& w : issues.warnings) report.warnings.push_back(std::move(w));
    if (issues.errors.empty()) {
      result.predictions.instances.push_back(std::move(inst));
    } else {
      ++report.instances_dropped;
      for (Issue& e : issues.errors) report.errors.push_back(std::move(e));
    }
  }
  report.images_seen = images_seen.size();
  result.predictions.sort();

  if (options.max_per_image > 0) {
    std::vector<PredictionInstance> kept;
    std::size_t run = 0;
    for (std::size_t i = 0; i < result.predictions.instances.size(); ++i) {
      auto& inst = result.predictions.instances[i];
      run = (i > 0 && result.predictions.instances[i - 1].image_id == inst.image_id) ? run + 1
                                                                                     : 0;
      if (run < options.max_per_image) {
        kept.push_back(std::move(inst));
      } else {
        ++report.instances_dropped;
        report.warnings.push_back(
            {ErrorCode::kInstanceCapExceeded,
             prediction_loc(inst.input_index) + ": beyond the per-image cap of " +
                 std::to_string(options.max_per_image),
             prediction_loc(inst.input_index), inst.input_index});
      }
    }
    result.predictions.instances = std::move(kept);
  }
  return result;
}

PredictionSet parse_predictions(const Json& doc, const Dataset& dataset, Task task,
                                const PredictionOptions& options) {
  PredictionLoad load = inspect_predictions(doc, dataset, task, options);
  for (const Issue& issue : load.report.errors) {
    if (!options.lenient || !issue.instance) throw Error(issue.code, issue.message);
  }
  return std::move(load.predictions);
}

PredictionSet load_predictions(const std::filesystem::path& path, const Dataset& dataset,
                               Task task, const PredictionOptions& options) {
  return parse_predictions(read_json_file(path), dataset, task, options);
}

ValidationReport validate_predictions(const PredictionSet& preds, const Dataset& dataset) {
  ValidationReport report;
  std::set<std::int64_t> images_seen;
  for (std::size_t i = 0; i < preds.instances.size(); ++i) {
    const PredictionInstance& inst = preds.instances[i];
    const std::string where = prediction_loc(i);
    InstanceIssues issues;
    images_seen.insert(inst.image_id);
    check_score(inst.score, where, i, issues);
    if (inst.category_id != dataset.category().id) {
      issues.errors.push_back({ErrorCode::kCategoryMismatch,
                               where + ": category_id " + std::to_string(inst.category_id) +
                                   " differs from dataset category",
                               where, i});
    }
    const bool is_box = inst.box() != nullptr;
    if (is_box != (preds.task == Task::kDetection)) {
      issues.errors.push_back({ErrorCode::kWrongPayloadKind,
                               where + ": payload does not match task " +
                                   std::string(task_name(preds.task)),
                               where, i});
    }
    const ImageRecord* image = dataset.find_image(inst.image_id);
    if (image == nullptr) {
      issues.errors.push_back({ErrorCode::kUnknownImageRef,
                               where + ": unknown image_id " + std::to_string(inst.image_id),
                               where, i});
    } else {
      check_payload(inst.payload, *image, where, i, issues);
    }
    ++report.instances_seen;
    if (!issues.errors.empty()) ++report.instances_dropped;
    for (Issue& e : issues.errors) report.errors.push_back(std::move(e));
    for (Issue& w : issues.warnings) report.warnings.push_back(std::move(w));
  }
  report.images_seen = images_seen.size();
  return report;
}

Json serialize_ground_truth(const Dataset& dataset) {
  Json images = Json::array();
  for (const ImageRecord& img : dataset.images()) {
    images.push_back({{"id", img.id},
                      {"width", img.width},
                      {"height", img.height},
                      {"file_name", img.file_name}});
  }
  Json annotations = Json::array();
  for (const GroundTruthInstance& gt : dataset.annotations()) {
    annotations.push_back({{"id", gt.id},
                           {"image_id", gt.image_id},
                           {"category_id", gt.category_id},
                           {"bbox", bbox_json(gt.bbox)},
                           {"segmentation", polygon_json(gt.segmentation)},
                           {"iscrowd", 0}});
  }
  Json categories = Json::array(
      {Json{{"id", dataset.category().id}, {"name", dataset.category().name}}});
  return {{"images", std::move(images)},
          {"annotations", std::move(annotations)},
          {"categories", std::move(categories)}};
}

Json serialize_predictions(const PredictionSet& preds) {
  Json out = Json::array();
  for (const PredictionInstance& inst : preds.instances) {
    Json j = {{"image_id", inst.image_id},
              {"category_id", inst.category_id},
              {"score", inst.score}};
    if (const BBox* b = inst.box()) {
      j["bbox"] = bbox_json(*b);
    } else {
      j["segmentation"] = polygon_json(*inst.polygon());
    }
    out.push_back(std::move(j));
  }
  return out;
}

Json serialize_report(const ValidationReport& report) {
  Json errors = Json::array();
  for (const Issue& i : report.errors) errors.push_back(issue_json(i));
  Json warnings = Json::array();
  for (const Issue& i : report.warnings) warnings.push_back(issue_json(i));
  return {{"valid", report.ok()},
          {"errors", std::move(errors)},
          {"warnings", std::move(warnings)},
          {"counts",
           {{"images_seen", report.images_seen},
            {"instances_seen", report.instances_seen},
            {"instances_dropped", report.instances_dropped}}}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

}  // namespace ripdet
