#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "ripdet/cli.hpp"

namespace ripdet::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "sha256 unavailable");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failed for " + path.string());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json manifest_to_json(const RunManifest& manifest) {
  Json inputs = Json::array();
  for (const auto& path : manifest.inputs) {
    inputs.push_back({{"path", path.string()},
                      {"sha256", sha256_file(path)},
                      {"bytes", std::filesystem::file_size(path)}});
  }
  Json outputs = Json::array();
  for (const auto& path : manifest.outputs) outputs.push_back(path.string());
  return {{"tool", "ripdet"},
          {"version", kToolVersion},
          {"command", manifest.command},
          {"config", manifest.config},
          {"inputs", std::move(inputs)},
          {"outputs", std::move(outputs)},
          {"timestamp", manifest.timestamp}};
}

}  // namespace ripdet::cli
