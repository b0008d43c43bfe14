#include "pg/local_context.hpp"

#include <stdexcept>

namespace pg {

LocalContextBlock::LocalContextBlock(std::string name, const Config& cfg, std::mt19937_64& rng)
    : cfg_(cfg),
      mapping_(name + ".map", {8 + cfg.d_in, cfg.d_mid, cfg.d_mid}, /*relu_after_last=*/true, rng),
      out_(name + ".out", cfg.d_mid, cfg.d_out, rng),
      feat_proj_(name + ".proj", cfg.d_in, cfg.d_out, rng),
      fuse_(name + ".fuse", 2 * cfg.d_out + cfg.d_mid, cfg.d_out, rng),
      shortcut_(name + ".shortcut", cfg.d_in, cfg.d_out, rng) {
    if (cfg.repetition < 1) throw std::invalid_argument("local context repetition must be >= 1");
    for (std::size_t r = 0; r < cfg.repetition; ++r)
        refine_.emplace_back(name + ".refine" + std::to_string(r), cfg.d_mid, cfg.d_mid, rng);
}

Tensor LocalContextBlock::neighbor_features(Tape& tape, Tensor r, Tensor features,
                                            const NeighborIndex& nbrs) {
    const Shape& rs = r.shape();
    if (rs.size() != 3 || rs[0] != nbrs.n || rs[1] != nbrs.k || rs[2] != 8)
        throw std::invalid_argument("neighbor encoding shape " + shape_str(rs) +
                                    " inconsistent with neighbor index");
    if (!features.valid()) return r; // d_in == 0
    Tensor gathered = tape.gather_rows(features, nbrs.indices, nbrs.k);
    return tape.concat({r, gathered}, 2);
}

LocalContextBlock::ForwardResult LocalContextBlock::forward(Tape& tape, Tensor p_hat) {
    const Shape& s = p_hat.shape();
    if (s.size() != 3 || s[2] != 8 + cfg_.d_in)
        throw std::invalid_argument("local context expects [N,k," + std::to_string(8 + cfg_.d_in) +
                                    "], got " + shape_str(s));
    const std::size_t n = s[0], k = s[1], c = s[2];
    Tensor flat = tape.reshape(p_hat, {n * k, c});
    Tensor mapped = mapping_.forward(tape, flat);
    Tensor grouped = tape.reshape(mapped, {n, k, cfg_.d_mid});
    Tensor pooled = tape.reshape(tape.max_pool_axis(grouped, 1).values, {n, cfg_.d_mid});
    Tensor x = pooled;
    for (auto& layer : refine_) x = tape.relu(layer.forward(tape, x));
    return ForwardResult{out_.forward(tape, x), pooled};
}

Tensor LocalContextBlock::encoder_layer(Tape& tape, const std::vector<double>& positions,
                                        const NeighborIndex& nbrs, Tensor features) {
    Tensor r = tape.constant({nbrs.n, nbrs.k, 8}, relative_neighbor_encoding(positions, nbrs));
    Tensor p_hat = neighbor_features(tape, r, features, nbrs);
    ForwardResult lc = forward(tape, p_hat);
    Tensor proj = tape.relu(feat_proj_.forward(tape, features));
    Tensor cat1 = tape.concat({lc.refined, proj}, 1);
    Tensor cat2 = tape.concat({cat1, lc.pooled}, 1);
    Tensor fused = fuse_.forward(tape, cat2);
    return tape.add(fused, shortcut_.forward(tape, features));
}

void LocalContextBlock::register_params(ParamRegistry& reg) {
    mapping_.register_params(reg);
    for (auto& l : refine_) l.register_params(reg);
    out_.register_params(reg);
    feat_proj_.register_params(reg);
    fuse_.register_params(reg);
    shortcut_.register_params(reg);
}

} // namespace pg
