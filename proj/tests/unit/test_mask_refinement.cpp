#include "ovseg/error.hpp"
#include "ovseg/mask.hpp"
#include "ovseg/mask_refinement.hpp"

#include "support/fixtures.hpp"
#include "support/reference.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace ovseg;
using namespace ovseg::masks;
using fixtures::rect_mask;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode{};
}

GranularitySchedule schedule(std::vector<double> tau) {
    GranularitySchedule s;
    for (std::size_t k = 0; k < tau.size(); ++k) s.levels.push_back(static_cast<double>(k + 1));
    s.thresholds = std::move(tau);
    return s;
}

std::set<std::pair<int, int>> pixel_set(const Mask2D& m) {
    std::set<std::pair<int, int>> s;
    for (auto p : m.pixels()) s.emplace(p.u, p.v);
    return s;
}

}  // namespace

TEST(Mask2D, RunsAreCanonical) {
    const std::vector<masks::Run> messy = {{10, 5}, {0, 3}, {3, 2}, {12, 1}, {20, 0}};
    const Mask2D m(0, 10, 3, 0, messy);
    EXPECT_EQ(m.runs(), (std::vector<masks::Run>{{0, 5}, {10, 5}}));
    EXPECT_EQ(m.area(), 10u);
    EXPECT_EQ(m, Mask2D::from_bitmap(0, 10, 3, 0, m.to_bitmap()));
}

TEST(Mask2D, BitmapRoundTripAndBBox) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto m = fixtures::random_mask(rng, 40, 30);
        const auto again = Mask2D::from_pixels(0, 40, 30, 0, m.pixels());
        EXPECT_EQ(m, again);
        int x0 = 40, y0 = 30, x1 = 0, y1 = 0;
        for (auto p : m.pixels()) {
            x0 = std::min(x0, p.u), y0 = std::min(y0, p.v), x1 = std::max(x1, p.u + 1), y1 = std::max(y1, p.v + 1);
        }
        EXPECT_EQ(m.bbox(), (PixelRect{x0, y0, x1, y1}));
    }
}

TEST(Mask2D, RejectsEmptyAndOutOfImage) {
    EXPECT_EQ(code_of([] { Mask2D(0, 4, 4, 0, {}); }), ErrorCode::EmptyInput);
    EXPECT_EQ(code_of([] { Mask2D(0, 4, 4, 0, {{14, 3}}); }), ErrorCode::OutOfBounds);
}

TEST(OverlapRatio, SpecCases) {
    const auto m = rect_mask(50, 50, 0, 0, 10, 10);
    EXPECT_DOUBLE_EQ(overlap_ratio(m, m), 1.0);
    EXPECT_DOUBLE_EQ(overlap_ratio(m, rect_mask(50, 50, 20, 20, 30, 30)), 0.0);
    // 100 px, 37 of them shared.
    std::vector<PixelCoord> other;
    for (int i = 0; i < 37; ++i) other.push_back({i % 10, i / 10});
    other.push_back({40, 40});
    EXPECT_DOUBLE_EQ(overlap_ratio(m, Mask2D::from_pixels(0, 50, 50, 0, other)), 0.37);
}

TEST(OverlapRatio, AsymmetricAndFrameChecked) {
    const auto small = rect_mask(50, 50, 0, 0, 5, 2);
    const auto big = rect_mask(50, 50, 0, 0, 10, 10);
    EXPECT_DOUBLE_EQ(overlap_ratio(small, big), 1.0);
    EXPECT_DOUBLE_EQ(overlap_ratio(big, small), 0.1);
    EXPECT_EQ(code_of([&] { overlap_ratio(big, rect_mask(50, 50, 0, 0, 3, 3, 0, 7)); }), ErrorCode::FrameMismatch);
}

TEST(OverlapRatio, MatchesPixelCountingOracle) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
        const auto a = fixtures::random_mask(rng, 32, 24), b = fixtures::random_mask(rng, 32, 24);
        EXPECT_DOUBLE_EQ(overlap_ratio(a, b), ref::overlap(ref::bitmap(a), ref::bitmap(b)));
    }
}

TEST(ProgressiveSelect, IdenticalFinerMaskRejected) {
    const auto m = rect_mask(50, 50, 10, 10, 20, 20);
    const std::vector<std::vector<Mask2D>> levels = {{m}, {rect_mask(50, 50, 10, 10, 20, 20, 1)}};
    const auto kept = progressive_select(levels, schedule({1.0, 0.5}));
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].level(), 0u);
}

TEST(ProgressiveSelect, DisjointFinerMaskKept) {
    const std::vector<std::vector<Mask2D>> levels = {{rect_mask(50, 50, 0, 0, 10, 10)},
                                                     {rect_mask(50, 50, 30, 30, 40, 40, 1)}};
    EXPECT_EQ(progressive_select(levels, schedule({1.0, 0.01})).size(), 2u);
}

TEST(ProgressiveSelect, ThreeLevelOverlapLadder) {
    // Level 0: 10x10 at the origin. Level 1: overlap 0.0. Level 2: overlap 0.4
    // with level 0. Level 3: overlap 0.9 with level 0.
    const auto base = rect_mask(60, 60, 0, 0, 10, 10);
    const auto none = rect_mask(60, 60, 40, 40, 50, 50, 1);
    const auto part = rect_mask(60, 60, 6, 0, 16, 10, 2);   // 4 of 10 columns shared
    const auto most = rect_mask(60, 60, 1, 0, 11, 10, 3);   // 9 of 10 columns shared
    EXPECT_DOUBLE_EQ(overlap_ratio(part, base), 0.4);
    EXPECT_DOUBLE_EQ(overlap_ratio(most, base), 0.9);
    const std::vector<std::vector<Mask2D>> levels = {{base}, {none}, {part}, {most}};
    const auto sel = progressive_select_indices(levels, schedule({0.5, 0.5, 0.5, 0.5}));
    std::vector<std::size_t> kept_levels;
    for (auto s : sel) kept_levels.push_back(s.level);
    EXPECT_EQ(kept_levels, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ProgressiveSelect, WithinLevelOrderIsAreaThenRaster) {
    const auto small = rect_mask(50, 50, 0, 0, 4, 4);
    const auto large = rect_mask(50, 50, 0, 0, 8, 8);
    const auto twin_late = rect_mask(50, 50, 20, 20, 28, 28);
    const std::vector<Mask2D> level = {small, twin_late, large};
    EXPECT_EQ(level_order(level), (std::vector<std::size_t>{2, 1, 0}));
    // Larger mask goes first, so the contained small one is rejected at tau 0.5.
    const auto sel = progressive_select_indices({level}, schedule({0.5}));
    ASSERT_EQ(sel.size(), 2u);
    EXPECT_EQ(sel[0].index, 2u);
    EXPECT_EQ(sel[1].index, 1u);
}

TEST(ProgressiveSelect, ScheduleMismatch) {
    const std::vector<std::vector<Mask2D>> levels = {{rect_mask(10, 10, 0, 0, 2, 2)}};
    EXPECT_EQ(code_of([&] { progressive_select(levels, schedule({1.0, 0.5})); }), ErrorCode::ScheduleMismatch);
}

TEST(ProgressiveSelect, MatchesReferenceAndInvariant) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> t(0.1, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<std::vector<Mask2D>> levels(3);
        std::vector<double> tau = {t(rng), t(rng), t(rng)};
        for (std::uint32_t k = 0; k < 3; ++k)
            for (int i = 0; i < 6; ++i) levels[k].push_back(fixtures::random_mask(rng, 30, 20, k));
        const auto got = progressive_select_indices(levels, schedule(tau));
        const auto want = ref::progressive_select(levels, tau);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].level, want[i].first);
            EXPECT_EQ(got[i].index, want[i].second);
        }
        for (std::size_t i = 1; i < got.size(); ++i) {
            const auto& m = levels[got[i].level][got[i].index];
            for (std::size_t j = 0; j < i; ++j) {
                EXPECT_LT(overlap_ratio(m, levels[got[j].level][got[j].index]), tau[got[i].level]);
            }
        }
    }
}

TEST(FilterSmall, SpecCases) {
    const auto tiny = rect_mask(100, 100, 40, 40, 45, 42);      // 10 px
    const auto interior = rect_mask(100, 100, 30, 30, 55, 50);  // 500 px
    const auto flush = rect_mask(100, 100, 0, 30, 30, 50);      // touches x = 0
    const std::vector<Mask2D> in = {tiny, interior, flush};
    const auto out = filter_small(in, 50, 2);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0], interior);
}

TEST(FilterSmall, MarginBoundaryIsInclusiveOfDistance) {
    // Box starting exactly margin px from the left edge is kept; one closer is not.
    EXPECT_FALSE(is_small_or_marginal(rect_mask(40, 40, 2, 10, 12, 20), 1, 2));
    EXPECT_TRUE(is_small_or_marginal(rect_mask(40, 40, 1, 10, 12, 20), 1, 2));
    EXPECT_FALSE(is_small_or_marginal(rect_mask(40, 40, 10, 10, 38, 38), 1, 2));
    EXPECT_TRUE(is_small_or_marginal(rect_mask(40, 40, 10, 10, 39, 38), 1, 2));
}

TEST(FilterSmall, NeverGrowsAndIdempotent) {
    std::mt19937_64 rng(4);
    std::vector<Mask2D> in;
    for (int i = 0; i < 40; ++i) in.push_back(fixtures::random_mask(rng, 40, 30));
    const auto once = filter_small(in, 30, 1);
    EXPECT_LE(once.size(), in.size());
    EXPECT_EQ(filter_small(once, 30, 1), once);
}

TEST(SplitFragments2D, SolidBlobStaysWhole) {
    const auto blob = rect_mask(64, 64, 10, 10, 30, 30);
    const auto out = split_fragments_2d(blob, 2.0, 4);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0], blob);
}

TEST(SplitFragments2D, TwoSeparatedBlobs) {
    std::vector<PixelCoord> px;
    for (auto m : {rect_mask(100, 40, 5, 5, 15, 15), rect_mask(100, 40, 65, 5, 75, 15)})
        for (auto p : m.pixels()) px.push_back(p);
    const auto mask = Mask2D::from_pixels(0, 100, 40, 0, px);
    const auto out = split_fragments_2d(mask, 3.0, 8);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].area(), 100u);
    EXPECT_EQ(out[1].area(), 100u);
}

TEST(SplitFragments2D, AllNoiseIsDegenerate) {
    const std::vector<PixelCoord> px = {{0, 0}, {20, 20}, {40, 5}};
    const auto mask = Mask2D::from_pixels(0, 64, 64, 0, px);
    EXPECT_EQ(code_of([&] { split_fragments_2d(mask, 2.0, 4); }), ErrorCode::Degenerate);
}

TEST(SplitFragments2D, PartitionsInputAndMatchesReference) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_int_distribution<int> coord(0, 59), n(20, 300);
        std::vector<PixelCoord> px;
        const int count = n(rng);
        for (int i = 0; i < count; ++i) px.push_back({coord(rng), coord(rng)});
        const auto mask = Mask2D::from_pixels(0, 60, 60, 0, px);
        const auto pixels = mask.pixels();
        std::vector<Eigen::Vector2d> pts;
        for (auto p : pixels) pts.emplace_back(p.u, p.v);
        const auto labels = ref::dbscan(pts, 3.0, 4);

        std::set<std::set<std::pair<int, int>>> want;
        for (const auto& group : ref::partition(labels)) {
            std::set<std::pair<int, int>> s;
            for (auto i : group) s.emplace(pixels[i].u, pixels[i].v);
            want.insert(s);
        }
        std::set<std::set<std::pair<int, int>>> got;
        std::size_t total = 0;
        try {
            for (const auto& f : split_fragments_2d(mask, 3.0, 4)) {
                got.insert(pixel_set(f));
                total += f.area();
            }
        } catch (const Error& e) {
            ASSERT_EQ(e.code(), ErrorCode::Degenerate);
        }
        EXPECT_EQ(got, want);
        std::size_t union_size = 0;
        std::set<std::pair<int, int>> all;
        for (const auto& s : got) {
            union_size += s.size();
            all.insert(s.begin(), s.end());
        }
        EXPECT_EQ(all.size(), union_size);  // pairwise disjoint
        EXPECT_EQ(total, union_size);
        for (const auto& p : all) EXPECT_TRUE(mask.contains(p.first, p.second));
    }
}

TEST(RefineFrame, DefaultsAndProvenance) {
    const auto s = GranularitySchedule::defaults(640, 480);
    EXPECT_EQ(s.thresholds, (std::vector<double>{1.0, 0.3, 0.5}));
    EXPECT_EQ(s.min_area, 154u);  // ceil(0.0005 * 307200)
    EXPECT_EQ(s.margin_px, 1);

    // Raw list out of level order: a whole object, its two halves, and an
    // unrelated mask touching the border.
    const int w = 80, h = 60;
    std::vector<Mask2D> raw = {rect_mask(w, h, 20, 10, 40, 30, 1), rect_mask(w, h, 10, 10, 40, 30, 0),
                               rect_mask(w, h, 0, 40, 20, 60, 0), rect_mask(w, h, 10, 10, 20, 30, 1)};
    auto sched = GranularitySchedule::defaults(w, h);
    const auto out = refine_frame(raw, sched);
    // Level 1 halves overlap the whole fully (>= 0.3) and the border mask is
    // dropped, so only raw[1] survives.
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].source, 1u);
    EXPECT_EQ(out[0].fragment, 0u);
    EXPECT_EQ(out[0].mask, raw[1]);
}

TEST(RefineFrame, LevelBeyondSchedule) {
    std::vector<Mask2D> raw = {rect_mask(40, 40, 5, 5, 10, 10, 5)};
    EXPECT_EQ(code_of([&] { refine_frame(raw, GranularitySchedule::defaults(40, 40)); }), ErrorCode::ScheduleMismatch);
}
