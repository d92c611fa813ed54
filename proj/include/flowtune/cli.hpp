#pragma once

#include <cstdint>
#include <string>

#include "flowtune/knowledge.hpp"
#include "flowtune/tuner.hpp"

namespace flowtune::cli {

// Exit codes: 0 success, 1 internal error, 2 usage or input error.
inline constexpr int kOk = 0;
inline constexpr int kInternalError = 1;
inline constexpr int kUsageError = 2;

struct OfflineArgs {
    std::string log_path;
    std::string out_path;
    std::string merge_with; // optional prior knowledge base
    OfflineConfig config;
};

struct OnlineArgs {
    std::string kb_path;
    std::string scenario_path;
    std::string tuner = "asm"; // asm | static | additive
    std::string out_path;
    ParameterPoint static_theta{1, 1, 1};
    TunerConfig config;
    std::uint64_t seed = 0; // overrides the scenario seed when nonzero
};

int cmd_simgen(const std::string& scenario_path, const std::string& out_path,
               std::uint64_t seed_override = 0);
int cmd_offline(const OfflineArgs& args);
int cmd_online(const OnlineArgs& args);
int cmd_eval(const std::string& suite, const std::string& out_dir, std::uint64_t seed);

} // namespace flowtune::cli
