#pragma once

#include <string>

#include "pg/run_config.hpp"

namespace pg::cli {

// Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

/// Full argv entry point (subcommands gen/train/eval/segment/ablate).
int run(int argc, const char* const* argv);

// Command bodies, exposed for direct testing. They throw ConfigError /
// DataError / std::runtime_error; run() maps those to exit codes.
void cmd_gen(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
              const std::string& out_dir);
void cmd_segment(const std::string& checkpoint_path, const std::string& cloud_in,
                 const std::string& cloud_out);
void cmd_ablate(const RunConfig& cfg);

/// Labeled cloud files (*.xyzl, *.ply) in a directory, sorted by name.
std::vector<PointCloud> load_dataset(const std::string& dir);

} // namespace pg::cli
