#include "pg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pg {

void PointCloud::validate(std::size_t num_classes) const {
    if (n == 0) throw std::invalid_argument("point cloud must contain at least one point");
    if (positions.size() != n * 3) throw std::invalid_argument("positions size does not match point count");
    if (features.size() != n * d) throw std::invalid_argument("features size does not match point count");
    for (double v : positions)
        if (!std::isfinite(v)) throw std::invalid_argument("positions contain a non-finite value");
    if (!labels.empty()) {
        if (labels.size() != n) throw std::invalid_argument("label count does not match point count");
        if (num_classes > 0) {
            for (int l : labels)
                if (l < 0 || static_cast<std::size_t>(l) >= num_classes)
                    throw std::invalid_argument("label " + std::to_string(l) + " outside [0," +
                                                std::to_string(num_classes) + ")");
        }
    }
}

NeighborIndex knn(const std::vector<double>& positions, std::size_t n, std::size_t k) {
    if (k < 1 || k > n)
        throw std::invalid_argument("knn: k=" + std::to_string(k) + " outside [1," + std::to_string(n) + "]");
    NeighborIndex out;
    out.n = n;
    out.k = k;
    out.indices.resize(n * k);
    std::vector<std::pair<double, std::size_t>> cand(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = positions[i * 3], yi = positions[i * 3 + 1], zi = positions[i * 3 + 2];
        for (std::size_t j = 0; j < n; ++j) {
            const double dx = positions[j * 3] - xi;
            const double dy = positions[j * 3 + 1] - yi;
            const double dz = positions[j * 3 + 2] - zi;
            cand[j] = {dx * dx + dy * dy + dz * dz, j};
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        for (std::size_t j = 0; j < k; ++j) out.indices[i * k + j] = cand[j].second;
    }
    return out;
}

CentroidOffset centroid_offset(const std::vector<double>& positions, const NeighborIndex& nbrs) {
    CentroidOffset out;
    out.centroids.resize(nbrs.n * 3);
    out.L.resize(nbrs.n);
    for (std::size_t i = 0; i < nbrs.n; ++i) {
        double cx = 0, cy = 0, cz = 0;
        for (std::size_t j = 0; j < nbrs.k; ++j) {
            std::size_t p = nbrs.at(i, j);
            cx += positions[p * 3];
            cy += positions[p * 3 + 1];
            cz += positions[p * 3 + 2];
        }
        cx /= static_cast<double>(nbrs.k);
        cy /= static_cast<double>(nbrs.k);
        cz /= static_cast<double>(nbrs.k);
        out.centroids[i * 3] = cx;
        out.centroids[i * 3 + 1] = cy;
        out.centroids[i * 3 + 2] = cz;
        const double dx = positions[i * 3] - cx;
        const double dy = positions[i * 3 + 1] - cy;
        const double dz = positions[i * 3 + 2] - cz;
        out.L[i] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return out;
}

SamplingTrace random_subsample(const std::vector<double>& positions, std::size_t n,
                               std::size_t ratio, std::mt19937_64& rng,
                               const std::vector<std::size_t>* forced_kept) {
    if (ratio < 1) throw std::invalid_argument("subsample ratio must be >= 1");
    const std::size_t m = (n + ratio - 1) / ratio;
    SamplingTrace trace;
    if (forced_kept) {
        trace.kept = *forced_kept;
    } else {
        // Seeded shuffle prefix: Fisher-Yates over [0,n), keep the first m.
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
            std::swap(perm[i], perm[j]);
        }
        trace.kept.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
        std::sort(trace.kept.begin(), trace.kept.end());
    }
    trace.upmap.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_c = 0;
        for (std::size_t c = 0; c < trace.kept.size(); ++c) {
            std::size_t p = trace.kept[c];
            const double dx = positions[p * 3] - positions[i * 3];
            const double dy = positions[p * 3 + 1] - positions[i * 3 + 1];
            const double dz = positions[p * 3 + 2] - positions[i * 3 + 2];
            const double d2 = dx * dx + dy * dy + dz * dz;
            if (d2 < best) {
                best = d2;
                best_c = c;
            }
        }
        trace.upmap[i] = best_c;
    }
    return trace;
}

std::vector<double> relative_neighbor_encoding(const std::vector<double>& positions,
                                               const NeighborIndex& nbrs) {
    const CentroidOffset co = centroid_offset(positions, nbrs);
    std::vector<double> r(nbrs.n * nbrs.k * 8);
    for (std::size_t i = 0; i < nbrs.n; ++i) {
        const double cx = co.centroids[i * 3], cy = co.centroids[i * 3 + 1], cz = co.centroids[i * 3 + 2];
        for (std::size_t j = 0; j < nbrs.k; ++j) {
            const std::size_t p = nbrs.at(i, j);
            const double ox = positions[p * 3] - cx;
            const double oy = positions[p * 3 + 1] - cy;
            const double oz = positions[p * 3 + 2] - cz;
            double* row = &r[(i * nbrs.k + j) * 8];
            row[0] = ox;
            row[1] = oy;
            row[2] = oz;
            row[3] = cx;
            row[4] = cy;
            row[5] = cz;
            row[6] = std::sqrt(ox * ox + oy * oy + oz * oz);
            row[7] = co.L[i];
        }
    }
    return r;
}

} // namespace pg
