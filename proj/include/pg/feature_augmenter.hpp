#pragma once

#include "pg/tensor.hpp"

namespace pg {

/// Global max-pool summary fused back into per-point features through a
/// residual MLP; keeps the point count and feature width unchanged.
/// `depth` serial repetitions, each with its own parameters.
class FeatureAugmenterBlock {
public:
    FeatureAugmenterBlock() = default;
    FeatureAugmenterBlock(std::string name, std::size_t dim, std::size_t depth,
                          std::mt19937_64& rng);

    /// Columnwise maximum over points, [N,d] -> [1,d].
    static Tensor global_summary(Tape& tape, Tensor features);

    /// One local-global aggregation: concat(p_i, g) through the stage MLP.
    Tensor aggregate(Tape& tape, Tensor features, Tensor g, std::size_t stage);

    /// Full block: `depth` cascade steps of summary -> aggregate -> residual.
    Tensor forward(Tape& tape, Tensor features);

    void register_params(ParamRegistry& reg);

    std::size_t dim() const { return dim_; }
    std::size_t depth() const { return stages_.size(); }

    struct Stage {
        Mlp aggregation; // 2d -> d -> d
        Mlp residual;    // d -> d -> d, final layer linear
    };
    std::vector<Stage>& stages() { return stages_; }

private:
    std::size_t dim_ = 0;
    std::vector<Stage> stages_;
};

} // namespace pg
