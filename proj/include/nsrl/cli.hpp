#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nsrl::cli {

// Exit codes shared by the CLI surface.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitNoPlan = 3;
inline constexpr int kExitTraining = 4;

// Flag-level overrides; flags win over config fields, config over defaults.
struct Overrides {
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::vector<int>> months;
    std::optional<std::string> scenario;
    std::string config_base;  // directory of the config file, for relative paths
};

std::string default_config_text(const std::string& command);

// Creates out/run-NNNN (first unused counter) and returns its path.
std::string fresh_run_dir(const std::string& out_dir);

int cmd_mfrl(const std::string& config_text, const Overrides& ov);
int cmd_ilp(const std::string& config_text, const Overrides& ov);
int cmd_dpc(const std::string& config_text, const Overrides& ov);
int cmd_plan(const std::string& domain_path, const std::string& problem_path);
int cmd_eval_rbc(const std::string& config_text, const Overrides& ov);

}  // namespace nsrl::cli
