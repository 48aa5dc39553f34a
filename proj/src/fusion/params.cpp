#include <charconv>
#include <cmath>
#include <sstream>
#include <variant>

#include "ripdet/fusion.hpp"

namespace ripdet {

namespace {

using Field = std::variant<double FusionParams::*, int FusionParams::*>;

struct NamedField {
  const char* name;
  Field field;
};

const std::vector<NamedField>& fields() {
  static const std::vector<NamedField> table = {
      {"w_seg", &FusionParams::w_seg},
      {"w_det", &FusionParams::w_det},
      {"iou_gate", &FusionParams::iou_gate},
      {"penalty", &FusionParams::penalty},
      {"wbf_iou", &FusionParams::wbf_iou},
      {"close_kernel", &FusionParams::close_kernel},
      {"min_region_area", &FusionParams::min_region_area},
      {"eps_ratio", &FusionParams::eps_ratio},
      {"ensemble_threshold", &FusionParams::ensemble_threshold},
      {"ensemble_min_area", &FusionParams::ensemble_min_area},
      {"seg_conf", &FusionParams::seg_conf},
      {"det_conf", &FusionParams::det_conf},
      {"merge_iou", &FusionParams::merge_iou},
      {"merge_ioa", &FusionParams::merge_ioa},
      {"match_iou", &FusionParams::match_iou},
      {"keep_conf", &FusionParams::keep_conf},
      {"guide_iou", &FusionParams::guide_iou},
      {"ntr_wbf_iou", &FusionParams::ntr_wbf_iou},
      {"open_kernel", &FusionParams::open_kernel},
      {"open_iterations", &FusionParams::open_iterations},
      {"soft_gate", &FusionParams::soft_gate},
  };
  return table;
}

const NamedField& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (key == f.name) return f;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown fusion parameter '" + std::string(key) + "'");
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::kInvalidConfig,
              "bad value '" + std::string(value) + "' for " + std::string(key));
}

void check_unit(const char* name, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, std::string(name) + " must lie in [0, 1]");
  }
}

}  // namespace

void FusionParams::validate() const {
  for (const auto& f : fields()) {
    if (const auto* d = std::get_if<double FusionParams::*>(&f.field)) {
      check_unit(f.name, this->*(*d));
    }
  }
  if (std::abs(w_seg + w_det - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig, "w_seg + w_det must equal 1");
  }
  for (int k : {close_kernel, open_kernel}) {
    if (k < 1 || k % 2 == 0) {
      throw Error(ErrorCode::kInvalidConfig, "kernel sizes must be odd and positive");
    }
  }
  if (min_region_area < 0 || ensemble_min_area < 0) {
    throw Error(ErrorCode::kInvalidConfig, "area floors must be non-negative");
  }
  if (open_iterations < 0) {
    throw Error(ErrorCode::kInvalidConfig, "open_iterations must be non-negative");
  }
}

void FusionParams::set(std::string_view key, std::string_view value) {
  const NamedField& f = find_field(key);
  const char* first = value.data();
  const char* last = value.data() + value.size();
  if (const auto* d = std::get_if<double FusionParams::*>(&f.field)) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) bad_value(key, value);
    this->*(*d) = v;
  } else {
    int v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) bad_value(key, value);
    this->*std::get<int FusionParams::*>(f.field) = v;
  }
}

void FusionParams::set(std::string_view key, const Json& value) {
  const NamedField& f = find_field(key);
  if (const auto* d = std::get_if<double FusionParams::*>(&f.field)) {
    if (!value.is_number()) bad_value(key, value.dump());
    this->*(*d) = value.get<double>();
  } else {
    if (!value.is_number_integer()) bad_value(key, value.dump());
    this->*std::get<int FusionParams::*>(f.field) = value.get<int>();
  }
}

Json params_to_json(const FusionParams& params) {
  Json j = Json::object();
  for (const auto& f : fields()) {
    if (const auto* d = std::get_if<double FusionParams::*>(&f.field)) {
      j[f.name] = params.*(*d);
    } else {
      j[f.name] = params.*std::get<int FusionParams::*>(f.field);
    }
  }
  return j;
}

FusionParams params_from_json(const Json& j, FusionParams base) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "fusion params must be an object");
  for (const auto& [key, value] : j.items()) base.set(key, value);
  return base;
}

ProbMask::ProbMask(int width, int height, double fill)
    : ProbMask(width, height,
               std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                       static_cast<std::size_t>(std::max(height, 0)),
                                   fill)) {}

ProbMask::ProbMask(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "probability mask needs positive dimensions");
  }
  if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::kInvalidArgument, "probability mask has the wrong number of values");
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "probability outside [0, 1]");
    }
  }
}

Mask ProbMask::binarize(double threshold) const {
  Mask m(width_, height_);
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      if (at(r, c) >= threshold) m.set(r, c);
    }
  }
  return m;
}

std::string write_prob_mask(const ProbMask& m) {
  std::ostringstream os;
  os.precision(17);
  os << "PROBMASK " << m.width() << ' ' << m.height() << '\n';
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) os << (c ? " " : "") << m.at(r, c);
    os << '\n';
  }
  return os.str();
}

ProbMask read_prob_mask(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  int w = 0, h = 0;
  if (!(is >> magic >> w >> h) || magic != "PROBMASK") {
    throw Error(ErrorCode::kInvalidArgument, "missing PROBMASK header");
  }
  if (w <= 0 || h <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "probability mask needs positive dimensions");
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  double v = 0.0;
  while (is >> v) values.push_back(v);
  if (!is.eof()) throw Error(ErrorCode::kInvalidArgument, "non-numeric probability value");
  return ProbMask(w, h, std::move(values));
}

ProbMask instances_to_prob_mask(const std::vector<PolygonSet>& polys,
                                const std::vector<double>& scores, int width, int height) {
  if (polys.size() != scores.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one score per polygon is required");
  }
  ProbMask out(width, height);
  for (std::size_t i = 0; i < polys.size(); ++i) {
    const Mask m = rasterize(polys[i], width, height);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        if (m.at(r, c) && scores[i] > out.at(r, c)) out.set(r, c, scores[i]);
      }
    }
  }
  return out;
}

}  // namespace ripdet
