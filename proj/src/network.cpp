#include "pg/network.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace pg {

void NetworkConfig::validate() const {
    if (encoder_widths.empty() || encoder_widths.size() != downsample_ratios.size())
        throw std::invalid_argument("encoder_widths and downsample_ratios must be equal-length and non-empty");
    if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("dropout_rate must be in [0,1)");
    if (head_widths.size() != 2) throw std::invalid_argument("head_widths must list exactly 2 hidden widths");
    if (fa_depth_input < 1 || fa_depth_bottleneck < 1)
        throw std::invalid_argument("feature augmenter depths must be >= 1");
    if (local_repetition < 1) throw std::invalid_argument("local_repetition must be >= 1");
    for (std::size_t r : downsample_ratios)
        if (r < 1) throw std::invalid_argument("downsample ratios must be >= 1");
    if (!test_mode) {
        if (encoder_widths.size() != 5)
            throw std::invalid_argument("strict mode requires exactly 5 encoder stages");
        if (total_downsample() != 512)
            throw std::invalid_argument("strict mode requires downsample ratios multiplying to 512, got " +
                                        std::to_string(total_downsample()));
        if (encoder_widths.back() != 512)
            throw std::invalid_argument("strict mode requires a final encoder width of 512");
    }
}

std::size_t NetworkConfig::stem_in_dim() const {
    return std::max<std::size_t>(8, 3 + input_feature_dim);
}

std::size_t NetworkConfig::total_downsample() const {
    std::size_t p = 1;
    for (std::size_t r : downsample_ratios) p *= r;
    return p;
}

SegmentationNetwork::SegmentationNetwork(const NetworkConfig& cfg, std::uint64_t seed)
    : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t stem_out = 8;
    stem_ = LinearLayer("stem", cfg_.stem_in_dim(), stem_out, rng);
    stem_.register_params(registry_);

    if (cfg_.use_feature_augmenter) {
        input_fa_.emplace("fa_in", stem_out, cfg_.fa_depth_input, rng);
        input_fa_->register_params(registry_);
    }

    // reserve up front: the registry keeps raw pointers into these blocks,
    // so the vectors must never reallocate once registration starts
    encoder_.reserve(cfg_.stages());
    decoder_.reserve(cfg_.stages());

    std::size_t d_in = stem_out;
    for (std::size_t s = 0; s < cfg_.stages(); ++s) {
        LocalContextBlock::Config lc;
        lc.d_in = d_in;
        lc.d_mid = cfg_.encoder_widths[s];
        lc.d_out = cfg_.encoder_widths[s];
        lc.repetition = cfg_.local_repetition;
        lc.k = cfg_.k;
        encoder_.emplace_back("enc" + std::to_string(s), lc, rng);
        encoder_.back().register_params(registry_);
        d_in = cfg_.encoder_widths[s];
    }

    if (cfg_.use_feature_augmenter) {
        bottleneck_fa_.emplace("fa_bottleneck", cfg_.encoder_widths.back(), cfg_.fa_depth_bottleneck, rng);
        bottleneck_fa_->register_params(registry_);
    }

    const std::size_t S = cfg_.stages();
    std::size_t cur = cfg_.encoder_widths.back();
    for (std::size_t i = 0; i < S; ++i) {
        const std::size_t s = S - 1 - i; // encoder stage whose skip this consumes
        const std::size_t skip_w = cfg_.encoder_widths[s];
        const std::size_t out_w = (s >= 1) ? cfg_.encoder_widths[s - 1] : cfg_.encoder_widths[0];
        decoder_.emplace_back("dec" + std::to_string(i), std::vector<std::size_t>{cur + skip_w, out_w, out_w},
                              /*relu_after_last=*/true, rng);
        decoder_.back().register_params(registry_);
        cur = out_w;
    }

    fc1_ = LinearLayer("head.fc1", cur, cfg_.head_widths[0], rng);
    fc2_ = LinearLayer("head.fc2", cfg_.head_widths[0], cfg_.head_widths[1], rng);
    fc3_ = LinearLayer("head.fc3", cfg_.head_widths[1], cfg_.num_classes, rng);
    fc1_.register_params(registry_);
    fc2_.register_params(registry_);
    fc3_.register_params(registry_);
}

Tensor SegmentationNetwork::input_lift(Tape& tape, const PointCloud& cloud) {
    const std::size_t in = cfg_.stem_in_dim();
    std::vector<double> stem_in(cloud.n * in, 0.0);
    for (std::size_t i = 0; i < cloud.n; ++i) {
        stem_in[i * in] = cloud.positions[i * 3];
        stem_in[i * in + 1] = cloud.positions[i * 3 + 1];
        stem_in[i * in + 2] = cloud.positions[i * 3 + 2];
        for (std::size_t j = 0; j < cloud.d && 3 + j < in; ++j)
            stem_in[i * in + 3 + j] = cloud.features[i * cloud.d + j];
    }
    Tensor x = tape.constant({cloud.n, in}, std::move(stem_in));
    return stem_.forward(tape, x);
}

SegmentationNetwork::ForwardResult SegmentationNetwork::forward(
    Tape& tape, const PointCloud& cloud, bool training, std::mt19937_64& rng,
    const std::vector<std::vector<std::size_t>>* replay_kept) {
    cloud.validate();
    if (cloud.n < cfg_.min_points())
        throw std::invalid_argument("cloud with " + std::to_string(cloud.n) +
                                    " points is too small for the x" + std::to_string(cfg_.total_downsample()) +
                                    " sampling cascade" + (cfg_.test_mode ? "" : " (consider test mode)"));
    if (replay_kept && replay_kept->size() != cfg_.stages())
        throw std::invalid_argument("replay kept-set count does not match stage count");

    Tensor f = input_lift(tape, cloud);
    if (input_fa_) f = input_fa_->forward(tape, f);

    std::vector<double> pos = cloud.positions;
    std::size_t n_cur = cloud.n;
    std::vector<Tensor> skips;
    std::vector<SamplingTrace> traces;
    for (std::size_t s = 0; s < cfg_.stages(); ++s) {
        const std::size_t k_eff = std::min(cfg_.k, n_cur);
        NeighborIndex nbrs = knn(pos, n_cur, k_eff);
        Tensor e = encoder_[s].encoder_layer(tape, pos, nbrs, f);
        skips.push_back(e);
        SamplingTrace trace = random_subsample(pos, n_cur, cfg_.downsample_ratios[s], rng,
                                               replay_kept ? &(*replay_kept)[s] : nullptr);
        f = tape.gather_rows(e, trace.kept);
        std::vector<double> next_pos(trace.kept.size() * 3);
        for (std::size_t i = 0; i < trace.kept.size(); ++i)
            std::copy_n(pos.begin() + static_cast<std::ptrdiff_t>(trace.kept[i] * 3), 3,
                        next_pos.begin() + static_cast<std::ptrdiff_t>(i * 3));
        pos = std::move(next_pos);
        n_cur = trace.kept.size();
        traces.push_back(std::move(trace));
    }

    if (bottleneck_fa_) f = bottleneck_fa_->forward(tape, f);

    for (std::size_t i = 0; i < cfg_.stages(); ++i) {
        const std::size_t s = cfg_.stages() - 1 - i;
        Tensor up = tape.gather_rows(f, traces[s].upmap);
        Tensor cat = tape.concat({up, skips[s]}, 1);
        f = decoder_[i].forward(tape, cat);
    }

    Tensor h = tape.relu(fc1_.forward(tape, f));
    h = tape.dropout(h, cfg_.dropout_rate, training, rng);
    h = tape.relu(fc2_.forward(tape, h));
    Tensor logits = fc3_.forward(tape, h);
    return ForwardResult{logits, std::move(traces)};
}

std::vector<int> argmax_rows(const Tensor& logits) {
    const Shape& s = logits.shape();
    const std::size_t n = s[0], c = s[1];
    const auto& v = logits.value();
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j)
            if (v[i * c + j] > v[i * c + best]) best = j;
        out[i] = static_cast<int>(best);
    }
    return out;
}

} // namespace pg
