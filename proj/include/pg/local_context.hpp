#pragma once

#include "pg/geometry.hpp"
#include "pg/tensor.hpp"

namespace pg {

/// Per-point neighborhood encoder: a shared pointwise mapping MLP over each
/// neighbor's 8-channel relative encoding plus its features, max-pooled over
/// the neighbor axis, then refined by R serial blocks and projected to the
/// output width.
class LocalContextBlock {
public:
    struct Config {
        std::size_t d_in = 0;
        std::size_t d_mid = 0;
        std::size_t d_out = 0;
        std::size_t repetition = 1; // R
        std::size_t k = 16;
    };

    LocalContextBlock() = default;
    LocalContextBlock(std::string name, const Config& cfg, std::mt19937_64& rng);

    /// p_hat[i,j] = concat(r[i,j], features[nbrs[i,j]]). With d_in == 0 the
    /// encoding passes through unchanged.
    static Tensor neighbor_features(Tape& tape, Tensor r, Tensor features,
                                    const NeighborIndex& nbrs);

    struct ForwardResult {
        Tensor refined; // [N, d_out]
        Tensor pooled;  // [N, d_mid], the pre-refinement pooled feature
    };
    /// Mapping MLP per neighbor, pool over k, R refine steps, out projection.
    ForwardResult forward(Tape& tape, Tensor p_hat);

    /// Full encoder layer: relative encoding, local context, dual
    /// concatenation with a feature projection and the pooled neighborhood
    /// feature, final projection, plus a linear shortcut of the input.
    Tensor encoder_layer(Tape& tape, const std::vector<double>& positions,
                         const NeighborIndex& nbrs, Tensor features);

    void register_params(ParamRegistry& reg);

    const Config& config() const { return cfg_; }

private:
    Config cfg_;
    Mlp mapping_;                     // (8+d_in) -> d_mid -> d_mid, ReLU after each
    std::vector<LinearLayer> refine_; // R x (d_mid -> d_mid), ReLU applied after each
    LinearLayer out_;                 // d_mid -> d_out
    LinearLayer feat_proj_;           // d_in -> d_out, first concat operand
    LinearLayer fuse_;                // (2*d_out + d_mid) -> d_out
    LinearLayer shortcut_;            // d_in -> d_out
};

} // namespace pg
