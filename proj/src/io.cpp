#include "sgdlim/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sgdlim {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ConfigMap cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    cfg.set(key, value);
  }
  return cfg;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

bool ConfigMap::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& def) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

long long ConfigMap::get_int(const std::string& key, long long def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected integer, got '" +
                      it->second + "'");
  }
}

std::uint64_t ConfigMap::get_u64(const std::string& key,
                                 std::uint64_t def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected unsigned integer, got '" +
                      it->second + "'");
  }
}

double ConfigMap::get_real(const std::string& key, double def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected real, got '" + it->second +
                      "'");
  }
}

std::vector<double> ConfigMap::get_real_list(
    const std::string& key, const std::vector<double>& def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected comma-separated reals");
    }
  }
  if (out.empty())
    throw ConfigError("key '" + key + "': empty list");
  return out;
}

void ConfigMap::validate_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [key, _] : kv_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string ConfigMap::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  auto mix = [&](const std::string& s) {
    for (const unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& [key, value] : kv_) {
    mix(key);
    mix("=");
    mix(value);
    mix("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string output_header(const ConfigMap& cfg,
                          const std::vector<std::uint64_t>& seeds) {
  std::ostringstream out;
  out << "# tool: sgdlim " << kToolVersion << "\n";
  out << "# config_hash: " << cfg.hash() << "\n";
  out << "# seeds:";
  for (const auto s : seeds) out << ' ' << s;
  out << "\n";
  return out.str();
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& header) {
  std::ofstream out(path);
  if (!out) throw NumericalError("write_trajectory_csv: cannot open " + path);
  out << header;
  const Index dim = traj.states.empty() ? 0 : traj.states.front().size();
  out << "t";
  for (Index j = 0; j < dim; ++j) out << ",x_" << (j + 1);
  out << ",loss,grad_norm\n";
  for (size_t i = 0; i < traj.size(); ++i) {
    out << fmt_g17(traj.times[i]);
    for (Index j = 0; j < dim; ++j) out << ',' << fmt_g17(traj.states[i][j]);
    out << ',' << fmt_g17(traj.losses[i]) << ',' << fmt_g17(traj.grad_norms[i])
        << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw NumericalError("write_text_file: cannot open " + path);
  out << content;
}

}  // namespace sgdlim
