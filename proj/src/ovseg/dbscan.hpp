#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <unordered_map>
#include <vector>

namespace ovseg::clustering {

inline constexpr int kNoise = -1;

struct DbscanResult {
    std::vector<int> labels;  // cluster id per point, kNoise for noise
    int cluster_count = 0;
};

// Uniform hash grid with cell edge `cell`; radius queries with radius <= cell
// only need to visit the 3^Dim surrounding cells.
template <int Dim>
class HashGrid {
public:
    using Point = Eigen::Matrix<double, Dim, 1>;

    HashGrid(std::span<const Point> points, double cell) : points_(points), cell_(cell) {
        cells_.reserve(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) cells_[key(cell_of(points[i]))].push_back(i);
    }

    // Indices of all points within `radius` (inclusive) of `query`, ascending.
    void radius_query(const Point& query, double radius, std::vector<std::size_t>& out) const {
        out.clear();
        const double r2 = radius * radius;
        const auto center = cell_of(query);
        Coord offset;
        visit(center, offset, 0, [&](const Coord& c) {
            auto it = cells_.find(key(c));
            if (it == cells_.end()) return;
            for (std::size_t idx : it->second) {
                if ((points_[idx] - query).squaredNorm() <= r2) out.push_back(idx);
            }
        });
        std::sort(out.begin(), out.end());
    }

private:
    using Coord = std::array<std::int64_t, Dim>;

    Coord cell_of(const Point& p) const {
        Coord c;
        for (int d = 0; d < Dim; ++d) c[d] = static_cast<std::int64_t>(std::floor(p[d] / cell_));
        return c;
    }

    static std::uint64_t key(const Coord& c) {
        std::uint64_t h = 1469598103934665603ull;
        for (int d = 0; d < Dim; ++d) {
            h ^= static_cast<std::uint64_t>(c[d]) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }

    template <typename Fn>
    void visit(const Coord& center, Coord& offset, int dim, Fn&& fn) const {
        if (dim == Dim) {
            Coord c;
            for (int d = 0; d < Dim; ++d) c[d] = center[d] + offset[d];
            fn(c);
            return;
        }
        for (std::int64_t o = -1; o <= 1; ++o) {
            offset[dim] = o;
            visit(center, offset, dim + 1, fn);
        }
    }

    std::span<const Point> points_;
    double cell_;
    // Hash collisions only add candidates; the distance test filters them.
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

// Density-based clustering. A point is core when at least `min_pts` points
// (itself included) lie within `eps`. Points are visited in index order and
// clusters are numbered in discovery order, so border points shared by two
// clusters go to the one discovered first.
template <int Dim>
DbscanResult dbscan(std::span<const Eigen::Matrix<double, Dim, 1>> points, double eps, std::size_t min_pts) {
    constexpr int kUnvisited = -2;
    DbscanResult result;
    result.labels.assign(points.size(), kUnvisited);
    if (points.empty()) return result;

    const HashGrid<Dim> grid(points, eps);
    std::vector<std::size_t> neighbors;
    std::vector<std::size_t> expansion;
    std::deque<std::size_t> frontier;

    for (std::size_t i = 0; i < points.size(); ++i) {
        if (result.labels[i] != kUnvisited) continue;
        grid.radius_query(points[i], eps, neighbors);
        if (neighbors.size() < min_pts) {
            result.labels[i] = kNoise;
            continue;
        }
        const int cluster = result.cluster_count++;
        result.labels[i] = cluster;
        frontier.assign(neighbors.begin(), neighbors.end());
        while (!frontier.empty()) {
            const std::size_t q = frontier.front();
            frontier.pop_front();
            int& label = result.labels[q];
            if (label == kNoise) label = cluster;
            if (label != kUnvisited) continue;
            label = cluster;
            grid.radius_query(points[q], eps, expansion);
            if (expansion.size() < min_pts) continue;
            for (std::size_t n : expansion) {
                if (result.labels[n] == kUnvisited || result.labels[n] == kNoise) frontier.push_back(n);
            }
        }
    }
    return result;
}

}  // namespace ovseg::clustering
