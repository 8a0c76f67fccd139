#pragma once

#include "ovseg/geometry.hpp"
#include "ovseg/mask.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using ovseg::geometry::Vec3;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("ovseg_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline ovseg::geometry::Intrinsics intrinsics(int w = 64, int h = 48, double f = 60.0) {
    return {f, f, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
}

inline ovseg::geometry::Pose random_pose(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> t(-3.0, 3.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    ovseg::geometry::Pose p;
    p.rotation = q.toRotationMatrix();
    p.translation = Vec3(t(rng), t(rng), t(rng));
    return p;
}

inline ovseg::geometry::Frame plane_frame(std::uint32_t id, float depth, int w = 64, int h = 48,
                                          const ovseg::geometry::Pose& pose = {}) {
    ovseg::geometry::Frame f;
    f.id = id;
    f.intrinsics = intrinsics(w, h);
    f.depth = ovseg::geometry::DepthImage(w, h, depth);
    f.pose = pose;
    return f;
}

inline ovseg::masks::Mask2D rect_mask(int w, int h, int x0, int y0, int x1, int y1, std::uint32_t level = 0,
                                      std::uint32_t frame = 0) {
    std::vector<ovseg::masks::PixelCoord> px;
    for (int v = y0; v < y1; ++v)
        for (int u = x0; u < x1; ++u) px.push_back({u, v});
    return ovseg::masks::Mask2D::from_pixels(frame, w, h, level, px);
}

// Union of a few random rectangles; never empty.
inline ovseg::masks::Mask2D random_mask(std::mt19937_64& rng, int w, int h, std::uint32_t level = 0) {
    std::uniform_int_distribution<int> nrect(1, 3);
    std::vector<std::uint8_t> bm(static_cast<std::size_t>(w) * h, 0);
    const int k = nrect(rng);
    for (int r = 0; r < k; ++r) {
        std::uniform_int_distribution<int> ux(0, w - 2), uy(0, h - 2);
        const int x0 = ux(rng), y0 = uy(rng);
        std::uniform_int_distribution<int> sx(1, std::max(1, (w - x0) / 2)), sy(1, std::max(1, (h - y0) / 2));
        const int x1 = x0 + sx(rng), y1 = y0 + sy(rng);
        for (int v = y0; v < y1; ++v)
            for (int u = x0; u < x1; ++u) bm[static_cast<std::size_t>(v) * w + u] = 1;
    }
    return ovseg::masks::Mask2D::from_bitmap(0, w, h, level, bm);
}

inline std::vector<float> random_unit(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<float> n(0.0f, 1.0f);
    std::vector<float> v(d);
    double s = 0.0;
    for (auto& x : v) {
        x = n(rng);
        s += double(x) * x;
    }
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(s));
    return v;
}

// Isotropic Gaussian blob around c.
inline std::vector<Vec3> blob(std::mt19937_64& rng, const Vec3& c, double sigma, std::size_t n) {
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < n; ++i) pts.emplace_back(c + Vec3(g(rng), g(rng), g(rng)));
    return pts;
}

}  // namespace fixtures
