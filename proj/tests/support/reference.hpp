#pragma once

// Deliberately naive reimplementations used as test oracles. None of this
// shares code with the engine beyond plain data types.

#include "ovseg/context_embedding.hpp"
#include "ovseg/geometry.hpp"
#include "ovseg/labeling_eval.hpp"
#include "ovseg/mask.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <vector>

namespace ref {

using Cell = std::tuple<long long, long long, long long>;

inline std::set<Cell> cells(const std::vector<Eigen::Vector3d>& points, double size) {
    std::set<Cell> out;
    for (const auto& p : points) {
        out.emplace(static_cast<long long>(std::floor(p.x() / size)), static_cast<long long>(std::floor(p.y() / size)),
                    static_cast<long long>(std::floor(p.z() / size)));
    }
    return out;
}

inline std::set<Cell> cells(const ovseg::geometry::VoxelSet& v) {
    std::set<Cell> out;
    for (const auto& k : v.occupied()) out.emplace(k.x, k.y, k.z);
    return out;
}

inline std::size_t common(const std::set<Cell>& a, const std::set<Cell>& b) {
    std::size_t n = 0;
    for (const auto& c : a) n += b.count(c);
    return n;
}

inline bool merge_rule(double ab, double ba, double gamma, double delta) {
    if (ab <= gamma) return false;
    if (ba <= gamma) return false;
    return std::fabs(ab - ba) < delta;
}

// Quadratic DBSCAN, formulated through core-point connectivity instead of
// queue expansion. Clusters are ordered by their lowest-index core point; a
// border point joins the earliest cluster owning a core point within eps.
template <class P>
std::vector<int> dbscan(const std::vector<P>& pts, double eps, std::size_t min_pts) {
    const std::size_t n = pts.size();
    auto close = [&](std::size_t i, std::size_t j) { return (pts[i] - pts[j]).squaredNorm() <= eps * eps; };
    std::vector<char> core(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cnt = 0;
        for (std::size_t j = 0; j < n; ++j) cnt += close(i, j);
        core[i] = cnt >= min_pts;
    }
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i]) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (core[j] && close(i, j)) parent[find(i)] = find(j);
        }
    }
    std::map<std::size_t, int> cluster_of_root;
    std::vector<int> label(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i]) continue;
        const auto r = find(i);
        auto it = cluster_of_root.find(r);
        if (it == cluster_of_root.end()) it = cluster_of_root.emplace(r, static_cast<int>(cluster_of_root.size())).first;
        label[i] = it->second;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        int best = -1;
        for (std::size_t j = 0; j < n; ++j) {
            if (core[j] && close(i, j) && (best < 0 || label[j] < best)) best = label[j];
        }
        label[i] = best;
    }
    return label;
}

// Groups of point indices per cluster, as a canonical set of sets.
inline std::set<std::vector<std::size_t>> partition(const std::vector<int>& labels) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) groups[labels[i]].push_back(i);
    }
    std::set<std::vector<std::size_t>> out;
    for (auto& [_, g] : groups) out.insert(g);
    return out;
}

inline std::vector<std::uint8_t> bitmap(const ovseg::masks::Mask2D& m) {
    std::vector<std::uint8_t> bm(static_cast<std::size_t>(m.width()) * m.height(), 0);
    for (int v = 0; v < m.height(); ++v) {
        for (int u = 0; u < m.width(); ++u) bm[static_cast<std::size_t>(v) * m.width() + u] = m.contains(u, v);
    }
    return bm;
}

inline double overlap(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    std::size_t inter = 0, area = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        area += a[i];
        inter += a[i] && b[i];
    }
    return area ? static_cast<double>(inter) / static_cast<double>(area) : 0.0;
}

// Coarse-to-fine selection: inside a level by descending area, then first
// raster pixel, then input position; keep when every overlap with the kept
// set is below the level threshold. Returns (level, index) pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> progressive_select(
    const std::vector<std::vector<ovseg::masks::Mask2D>>& levels, const std::vector<double>& tau) {
    std::vector<std::vector<std::uint8_t>> kept_bitmaps;
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        std::vector<std::size_t> order(levels[k].size());
        std::iota(order.begin(), order.end(), 0);
        auto first_pixel = [&](std::size_t i) {
            const auto bm = bitmap(levels[k][i]);
            return static_cast<std::size_t>(std::find(bm.begin(), bm.end(), 1) - bm.begin());
        };
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto aa = levels[k][a].area(), ab = levels[k][b].area();
            if (aa != ab) return aa > ab;
            const auto fa = first_pixel(a), fb = first_pixel(b);
            if (fa != fb) return fa < fb;
            return a < b;
        });
        for (std::size_t i : order) {
            const auto bm = bitmap(levels[k][i]);
            bool ok = true;
            for (const auto& prior : kept_bitmaps) ok = ok && overlap(bm, prior) < tau[k];
            if (ok) {
                kept.emplace_back(k, i);
                kept_bitmaps.push_back(bm);
            }
        }
    }
    return kept;
}

// Weighted sum in double, surroundings subtracted, then unit length.
inline std::vector<double> aggregate(const std::array<std::vector<float>, 5>& e, const std::array<double, 5>& w) {
    const std::size_t d = e[0].size();
    std::vector<double> out(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = w[0] * e[0][i] + w[1] * e[1][i] + w[2] * e[2][i] + w[3] * e[3][i] - w[4] * e[4][i];
    }
    double n = 0.0;
    for (double x : out) n += x * x;
    n = std::sqrt(n);
    for (double& x : out) x /= n;
    return out;
}

struct Metrics {
    double mAcc = 0.0;
    double mIoU = 0.0;
    double fmIoU = 0.0;
};

// Full confusion matrix over GT rows and predicted columns, plus a column for
// GT points with no prediction inside the radius. Nearest prediction by
// exhaustive scan; the earlier prediction wins exact ties.
inline Metrics metrics(const std::vector<ovseg::labeling::LabeledPoint>& pred,
                       const std::vector<ovseg::labeling::LabeledPoint>& gt, double radius) {
    std::size_t k = 0;
    for (const auto& p : pred) k = std::max(k, p.class_index + 1);
    for (const auto& g : gt) k = std::max(k, g.class_index + 1);
    std::vector<std::vector<double>> conf(k, std::vector<double>(k + 1, 0.0));
    for (const auto& g : gt) {
        std::size_t col = k;
        double best = radius * radius;
        bool found = false;
        for (const auto& p : pred) {
            const double d = (p.point - g.point).squaredNorm();
            if (d <= radius * radius && (!found || d < best)) {
                best = d;
                col = p.class_index;
                found = true;
            }
        }
        conf[g.class_index][col] += 1.0;
    }
    Metrics m;
    std::size_t present = 0;
    for (std::size_t c = 0; c < k; ++c) {
        double row = 0.0, column = 0.0;
        for (std::size_t j = 0; j <= k; ++j) row += conf[c][j];
        for (std::size_t r = 0; r < k; ++r) column += conf[r][c];
        if (row == 0.0) continue;
        ++present;
        const double iou = conf[c][c] / (row + column - conf[c][c]);
        m.mIoU += iou;
        m.mAcc += conf[c][c] / row;
        m.fmIoU += row / static_cast<double>(gt.size()) * iou;
    }
    m.mIoU /= static_cast<double>(present);
    m.mAcc /= static_cast<double>(present);
    return m;
}

}  // namespace ref
