#pragma once

#include "sgdlim/flow.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sgdlim {

inline constexpr const char* kToolVersion = "0.1.0";

/// Configuration or usage problem; maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Flat key=value configuration with typed accessors. Keys are validated
/// against the owning subcommand's schema before any computation starts.
class ConfigMap {
 public:
  ConfigMap() = default;

  /// Parse "key=value" lines; '#' starts a comment, blank lines are ignored.
  static ConfigMap from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& def) const;
  long long get_int(const std::string& key, long long def) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  double get_real(const std::string& key, double def) const;
  std::vector<double> get_real_list(const std::string& key,
                                    const std::vector<double>& def) const;

  /// Throws ConfigError when a key outside `allowed` is present.
  void validate_keys(const std::vector<std::string>& allowed) const;

  /// FNV-1a hash of the sorted canonical "key=value" lines.
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

/// printf %.17g formatting used for every CSV number, so identical runs give
/// byte-identical files.
std::string fmt_g17(double v);

/// Comment header recording tool version, config hash and seed list; every
/// output file (CSV and plot script alike) starts with it.
std::string output_header(const ConfigMap& cfg,
                          const std::vector<std::uint64_t>& seeds);

/// Trajectory CSV: columns t, x_1..x_D, loss, grad_norm.
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& header);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace sgdlim
