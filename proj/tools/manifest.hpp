#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace switchnet::cli {

struct Artifact {
  std::string role;
  std::filesystem::path path;
  std::uint32_t crc32 = 0;
  std::uint64_t bytes = 0;
};

/// manifest.json of one run: written with status "running" before any work and
/// rewritten with "ok" or "failed" plus output checksums at the end.
class RunManifest {
 public:
  RunManifest(std::filesystem::path out_dir, std::vector<std::string> argv, std::string command);

  void set_config(std::string text) { config_ = std::move(text); }
  void add_seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void add_input(const std::string& role, const std::filesystem::path& path);
  void add_output(const std::string& role, const std::filesystem::path& path);

  void begin();
  void finish(bool ok, const std::string& error = {});

  std::string to_json() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<std::string> argv_;
  std::string command_;
  std::string config_;
  std::map<std::string, std::uint64_t> seeds_;
  std::vector<Artifact> inputs_;
  std::vector<Artifact> outputs_;
  std::string started_;
  std::string finished_;
  std::string status_ = "running";
  std::string error_;
};

/// UTC time as 2024-01-31T12:00:00Z.
std::string utc_timestamp();

}  // namespace switchnet::cli
