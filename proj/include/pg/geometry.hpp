#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace pg {

/// N points with xyz positions, d optional feature channels and optional
/// per-point class labels. Flat row-major storage.
struct PointCloud {
    std::vector<double> positions; // N*3
    std::vector<double> features;  // N*d
    std::vector<int> labels;       // empty or N
    std::size_t n = 0;
    std::size_t d = 0;

    bool has_labels() const { return !labels.empty(); }
    void validate(std::size_t num_classes = 0) const;
};

/// Per-point k nearest neighbors (self included), each row sorted by
/// nondecreasing distance, ties broken toward the lower index.
struct NeighborIndex {
    std::vector<std::size_t> indices; // N*k
    std::size_t n = 0;
    std::size_t k = 0;

    std::size_t at(std::size_t i, std::size_t j) const { return indices[i * k + j]; }
};

/// Downsampling record: which fine points were kept, and for every fine
/// point the nearest kept coarse point.
struct SamplingTrace {
    std::vector<std::size_t> kept;  // coarse -> fine index
    std::vector<std::size_t> upmap; // fine -> coarse index
};

NeighborIndex knn(const std::vector<double>& positions, std::size_t n, std::size_t k);

/// Neighborhood centroids and the distance from each point to its centroid.
struct CentroidOffset {
    std::vector<double> centroids; // N*3
    std::vector<double> L;         // N
};
CentroidOffset centroid_offset(const std::vector<double>& positions, const NeighborIndex& nbrs);

/// Keeps ceil(n/ratio) distinct points chosen uniformly; upmap is exact
/// nearest kept point. `forced_kept`, when given, replays a kept set
/// (e.g. for equivariance tests) instead of sampling.
SamplingTrace random_subsample(const std::vector<double>& positions, std::size_t n,
                               std::size_t ratio, std::mt19937_64& rng,
                               const std::vector<std::size_t>* forced_kept = nullptr);

/// Per-neighbor 8-channel encoding:
/// [ p_j - c_i (3) | c_i (3) | ||p_j - c_i|| (1) | L_i (1) ]
std::vector<double> relative_neighbor_encoding(const std::vector<double>& positions,
                                               const NeighborIndex& nbrs);

} // namespace pg
