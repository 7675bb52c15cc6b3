#include "romgait/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "romgait/errors.hpp"

namespace romgait {

std::string sha256_bytes(const void* data, std::size_t n) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data, n);
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path + " for hashing");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_bytes(bytes.data(), bytes.size());
}

std::string iso_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::add_input(const std::string& path) { input_hashes[path] = sha256_file(path); }

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["created_utc"] = created_utc.empty() ? iso_utc_now() : created_utc;
  j["seed"] = seed;
  j["resolved_config"] = resolved_config;
  j["input_hashes"] = input_hashes;
  j["outputs"] = outputs;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

}  // namespace romgait
