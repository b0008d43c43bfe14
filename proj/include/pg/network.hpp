#pragma once

#include <optional>

#include "pg/feature_augmenter.hpp"
#include "pg/geometry.hpp"
#include "pg/local_context.hpp"
#include "pg/tensor.hpp"

namespace pg {

struct NetworkConfig {
    std::size_t k = 16;
    std::vector<std::size_t> encoder_widths{16, 64, 128, 256, 512};
    std::vector<std::size_t> downsample_ratios{4, 4, 4, 4, 2};
    std::size_t fa_depth_input = 2;
    std::size_t fa_depth_bottleneck = 2;
    std::size_t local_repetition = 1;
    std::size_t num_classes = 2;
    double dropout_rate = 0.5;
    std::vector<std::size_t> head_widths{64, 32};
    std::size_t input_feature_dim = 0;
    bool test_mode = false; // relaxes the 5-stage / x512 strict ladder
    bool use_feature_augmenter = true;

    void validate() const;
    std::size_t stages() const { return encoder_widths.size(); }
    std::size_t stem_in_dim() const;
    std::size_t total_downsample() const;
    /// Smallest point count the sampling cascade accepts.
    std::size_t min_points() const { return total_downsample(); }
};

/// Encoder-decoder segmentation network: stem lift to 8 channels, input
/// feature augmenter, per-stage local-context encoding with random
/// subsampling, bottleneck feature augmenter, nearest-neighbor upsampling
/// decoder with skip concatenation, and a 3-FC head with dropout.
class SegmentationNetwork {
public:
    SegmentationNetwork(const NetworkConfig& cfg, std::uint64_t seed);

    struct ForwardResult {
        Tensor logits;                    // [N, num_classes]
        std::vector<SamplingTrace> traces; // one per encoder stage
    };

    /// `replay_kept`, when given, fixes each stage's kept set instead of
    /// sampling from `rng` (upmaps are still recomputed from positions).
    ForwardResult forward(Tape& tape, const PointCloud& cloud, bool training,
                          std::mt19937_64& rng,
                          const std::vector<std::vector<std::size_t>>* replay_kept = nullptr);

    /// Stem: xyz + feature channels zero-padded, projected to width 8.
    Tensor input_lift(Tape& tape, const PointCloud& cloud);

    ParamRegistry& registry() { return registry_; }
    const ParamRegistry& registry() const { return registry_; }
    const NetworkConfig& config() const { return cfg_; }

private:
    NetworkConfig cfg_;
    LinearLayer stem_;
    std::optional<FeatureAugmenterBlock> input_fa_;
    std::vector<LocalContextBlock> encoder_;
    std::optional<FeatureAugmenterBlock> bottleneck_fa_;
    std::vector<Mlp> decoder_;
    LinearLayer fc1_, fc2_, fc3_;
    ParamRegistry registry_;
};

/// Predicted class per point from a logits tensor, first winner on ties.
std::vector<int> argmax_rows(const Tensor& logits);

} // namespace pg
