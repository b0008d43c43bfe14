#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pg/geometry.hpp"
#include "pg/tensor.hpp"
#include "pg/training.hpp"

namespace pg {

enum class CloudFormat { Xyzl, AsciiPly };

/// Lossless (1e-6 positions, exact labels) ASCII round trip. xyzl lines are
/// `x y z [f1..fm] label` with `#` comments; ply is standard ascii 1.0 with
/// a `label` vertex property.
PointCloud read_cloud(const std::string& path);
void write_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format);
CloudFormat format_for_path(const std::string& path);

struct SyntheticSceneSpec {
    double extent = 4.0;         // square road patch side, meters
    double point_density = 128.0; // points per m^2
    std::size_t pothole_count = 1;
    double radius_min = 0.4, radius_max = 0.8; // rim radius range
    double depth_min = 0.08, depth_max = 0.2;  // bowl depth range
    double roughness = 0.01;  // low-frequency surface amplitude
    double noise_sigma = 0.005; // Gaussian sensor noise
    std::uint64_t seed = 0;

    void validate() const;
};

/// Rough planar patch minus cosine-bowl depressions. A point is labeled
/// pothole iff it lies inside a rim radius and the analytic bowl depth at
/// its radius exceeds the noise sigma, so labels depend only on the
/// undisturbed geometry.
PointCloud generate_scene(const SyntheticSceneSpec& spec);

/// Analytic bowl depth at radius r from the pothole center.
double bowl_depth(double r, double rim_radius, double depth);

// --- Checkpoints (magic PGCK, versioned, raw little-endian doubles) ---

struct CheckpointContents {
    std::uint32_t version = 1;
    std::string config_text; // echoed network/run configuration
    std::size_t epoch_cursor = 0;
    std::vector<std::string> names;
    std::vector<Shape> shapes;
    std::vector<std::vector<double>> values;
    bool has_optimizer = false;
    std::size_t adam_step = 0;
    std::vector<std::vector<double>> adam_m, adam_v;
};

void save_checkpoint(const std::string& path, const ParamRegistry& reg,
                     const std::string& config_text, std::size_t epoch_cursor,
                     const AdamOptimizer* opt = nullptr);
CheckpointContents load_checkpoint(const std::string& path);

/// Copies checkpointed parameters (and optimizer state, when present and
/// requested) into a built network. Hard error on any name/shape mismatch.
void apply_checkpoint(const CheckpointContents& ckpt, ParamRegistry& reg,
                      AdamOptimizer* opt = nullptr);

/// Writes via a temp file renamed into place on success.
void write_file_atomic(const std::string& path, const std::string& contents);

} // namespace pg
