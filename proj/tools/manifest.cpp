#include "manifest.hpp"

#include <chrono>
#include <ctime>

#include "json.hpp"
#include "switchnet/io.hpp"

namespace switchnet::cli {

namespace {

Artifact describe(const std::string& role, const std::filesystem::path& path) {
  Artifact a{role, path, 0, 0};
  std::error_code ec;
  if (std::filesystem::is_regular_file(path, ec)) {
    const std::string bytes = read_file(path);
    a.crc32 = crc32(bytes);
    a.bytes = bytes.size();
  }
  return a;
}

nlohmann::ordered_json artifacts_json(const std::vector<Artifact>& list) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& a : list) {
    char hex[9];
    std::snprintf(hex, sizeof hex, "%08x", a.crc32);
    out.push_back({{"role", a.role}, {"path", a.path.string()}, {"crc32", hex}, {"bytes", a.bytes}});
  }
  return out;
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::filesystem::path out_dir, std::vector<std::string> argv,
                         std::string command)
    : path_(std::move(out_dir) / "manifest.json"), argv_(std::move(argv)), command_(std::move(command)) {}

void RunManifest::add_input(const std::string& role, const std::filesystem::path& path) {
  inputs_.push_back(describe(role, path));
}

void RunManifest::add_output(const std::string& role, const std::filesystem::path& path) {
  outputs_.push_back(describe(role, path));
}

void RunManifest::begin() {
  started_ = utc_timestamp();
  status_ = "running";
  atomic_write(path_, to_json());
}

void RunManifest::finish(bool ok, const std::string& error) {
  finished_ = utc_timestamp();
  status_ = ok ? "ok" : "failed";
  error_ = error;
  atomic_write(path_, to_json());
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["argv"] = argv_;
  j["config"] = config_;
  j["seeds"] = seeds_;
  j["inputs"] = artifacts_json(inputs_);
  j["outputs"] = artifacts_json(outputs_);
  j["started_at"] = started_;
  j["finished_at"] = finished_;
  j["status"] = status_;
  if (!error_.empty()) j["error"] = error_;
  return j.dump(2) + "\n";
}

}  // namespace switchnet::cli
