#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ripdet/coco_io.hpp"

namespace ripdet::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitValidation = 2,
  kExitConfig = 3,
};

int exit_code_for(ErrorCode code);

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Hex SHA-256 of a file's bytes. Throws Error(kIoError).
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  Json config;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  std::string timestamp;  // UTC, ISO 8601
};

// Digests every input; the timestamp is the only field that varies between
// identical runs.
Json manifest_to_json(const RunManifest& manifest);
std::string utc_timestamp();

struct FixtureSpec {
  std::uint64_t seed = 0;
  int images = 10;
  int instances = 3;  // per image, at most
  int width = 96;
  int height = 72;
  // 0 gives predictions equal to the ground truth with score 1.0.
  double perturbation = 0.2;
};

struct Fixture {
  Dataset dataset;
  PredictionSet detection;
  PredictionSet segmentation;
};

// Deterministic for a fixed spec on every platform.
Fixture generate_fixture(const FixtureSpec& spec);

}  // namespace ripdet::cli
