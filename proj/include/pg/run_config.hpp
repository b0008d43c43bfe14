#pragma once

#include <stdexcept>
#include <string>

#include "pg/data_io.hpp"
#include "pg/network.hpp"
#include "pg/training.hpp"

namespace pg {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Declarative run file: `key = value` lines, `#` comments, unknown keys are
/// a hard error. Covers the network, training, and scene-generation knobs.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "run_out";
    std::string train_dir;
    std::string val_dir;
    std::size_t gen_count = 4;
    NetworkConfig net;
    TrainConfig train;
    SyntheticSceneSpec scene;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_text(const std::string& text, const std::string& origin = "<config>");

    void set(const std::string& key, const std::string& value, const std::string& where);

    /// Canonical full key=value dump; parseable by from_text.
    std::string echo() const;
};

} // namespace pg
