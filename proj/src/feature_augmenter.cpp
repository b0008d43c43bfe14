#include "pg/feature_augmenter.hpp"

#include <stdexcept>

namespace pg {

FeatureAugmenterBlock::FeatureAugmenterBlock(std::string name, std::size_t dim,
                                             std::size_t depth, std::mt19937_64& rng)
    : dim_(dim) {
    if (depth < 1) throw std::invalid_argument("feature augmenter depth must be >= 1");
    for (std::size_t s = 0; s < depth; ++s) {
        std::string base = name + ".stage" + std::to_string(s);
        stages_.push_back(Stage{
            Mlp(base + ".agg", {2 * dim, dim, dim}, /*relu_after_last=*/false, rng),
            Mlp(base + ".res", {dim, dim, dim}, /*relu_after_last=*/false, rng),
        });
    }
}

Tensor FeatureAugmenterBlock::global_summary(Tape& tape, Tensor features) {
    return tape.max_pool_axis(features, 0).values;
}

Tensor FeatureAugmenterBlock::aggregate(Tape& tape, Tensor features, Tensor g,
                                        std::size_t stage) {
    const std::size_t n = features.shape()[0];
    Tensor rep = tape.repeat_rows(g, n);
    Tensor cat = tape.concat({features, rep}, 1);
    return stages_[stage].aggregation.forward(tape, cat);
}

Tensor FeatureAugmenterBlock::forward(Tape& tape, Tensor features) {
    if (features.shape().size() != 2 || features.shape()[1] != dim_)
        throw std::invalid_argument("feature augmenter expects [N," + std::to_string(dim_) +
                                    "] input, got " + shape_str(features.shape()));
    Tensor x = features;
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        Tensor g = global_summary(tape, x);
        Tensor agg = aggregate(tape, x, g, s);
        Tensor res = stages_[s].residual.forward(tape, tape.sub(agg, x));
        x = tape.add(x, res);
    }
    return x;
}

void FeatureAugmenterBlock::register_params(ParamRegistry& reg) {
    for (auto& s : stages_) {
        s.aggregation.register_params(reg);
        s.residual.register_params(reg);
    }
}

} // namespace pg
