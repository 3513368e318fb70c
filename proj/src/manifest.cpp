#include "rattleback/manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "rattleback/errors.hpp"

#ifndef RATTLEBACK_VERSION
#define RATTLEBACK_VERSION "0.0.0"
#endif

namespace rattleback {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DigestDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("SHA-256 initialisation failed");
    }
  }
  void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      out += buf;
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, DigestDeleter> ctx_;
};

std::string compact_timestamp(const std::string& iso) {
  std::string out;
  for (char ch : iso) {
    if (ch != '-' && ch != ':') out += ch;
  }
  return out;
}

}  // namespace

std::string tool_version() { return RATTLEBACK_VERSION; }

std::string sha256_bytes(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + file.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string iso_timestamp(std::chrono::system_clock::time_point t) {
  using namespace std::chrono;
  const auto ms = duration_cast<milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms % 1000));
  return buf;
}

fs::path runs_root() {
  const char* env = std::getenv("RATTLEBACK_RUNS_DIR");
  if (env && *env) return env;
  return "runs";
}

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["parameters"] = m.parameters;
  j["timestamp"] = m.timestamp;
  j["tool_version"] = m.tool_version;
  j["output_files"] = m.output_files;
  j["checksums"] = m.checksums;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.command = j.at("command").get<std::string>();
    m.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.output_files = j.at("output_files").get<std::vector<std::string>>();
    m.checksums = j.at("checksums").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed manifest: ") + e.what());
  }
  if (m.output_files.size() != m.checksums.size()) {
    throw Error(ErrorCode::InvalidArgument, "manifest lists files and checksums of different lengths");
  }
  return m;
}

RunDirectory::RunDirectory(const std::string& command,
                           std::map<std::string, std::string> parameters,
                           const fs::path& root) {
  manifest_.command = command;
  manifest_.parameters = std::move(parameters);
  manifest_.timestamp = iso_timestamp(std::chrono::system_clock::now());
  manifest_.tool_version = tool_version();
  fs::create_directories(root);
  const std::string base = compact_timestamp(manifest_.timestamp) + "-" + command;
  for (int n = 1;; ++n) {
    dir_ = root / (n == 1 ? base : base + "-" + std::to_string(n));
    if (fs::create_directory(dir_)) break;
  }
}

void RunDirectory::write(const std::string& name, const std::string& content) {
  std::ofstream out(dir_ / name, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + (dir_ / name).string());
  manifest_.output_files.push_back(name);
}

RunManifest RunDirectory::finish() {
  manifest_.checksums.clear();
  for (const auto& f : manifest_.output_files) manifest_.checksums.push_back(sha256_file(dir_ / f));
  std::ofstream out(dir_ / "manifest.json", std::ios::binary);
  out << manifest_to_json(manifest_);
  return manifest_;
}

std::vector<FileCheck> verify_run(const fs::path& run_dir) {
  std::ifstream in(run_dir / "manifest.json", std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "no manifest.json in " + run_dir.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const RunManifest m = manifest_from_json(ss.str());
  std::vector<FileCheck> out;
  for (std::size_t i = 0; i < m.output_files.size(); ++i) {
    FileCheck c{m.output_files[i], m.checksums[i], {}};
    const fs::path f = run_dir / m.output_files[i];
    if (fs::is_regular_file(f)) c.actual = sha256_file(f);
    out.push_back(c);
  }
  return out;
}

}  // namespace rattleback
