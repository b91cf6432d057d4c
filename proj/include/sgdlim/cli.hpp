#pragma once

#include "sgdlim/io.hpp"

namespace sgdlim::cli {

// Exit codes: 0 success, 1 check failure, 2 usage/config error,
// 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

int run(int argc, const char* const* argv);

int cmd_verify_derivatives(const ConfigMap& cfg, const std::string& out_dir);
int cmd_motor(const ConfigMap& cfg, const std::string& out_dir);
int cmd_olm_recover(const ConfigMap& cfg, const std::string& out_dir);
int cmd_olm_flow(const ConfigMap& cfg, const std::string& out_dir);
int cmd_sgd_vs_limit(const ConfigMap& cfg, const std::string& out_dir);
int cmd_kernel_baseline(const ConfigMap& cfg, const std::string& out_dir);

}  // namespace sgdlim::cli
