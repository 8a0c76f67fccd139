#include "ovseg/config.hpp"
#include "ovseg/error.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace ovseg;

namespace {

struct Caught {
    ErrorCode code{};
    std::string message;
};

Caught catch_error(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return {e.code(), e.what()};
    }
    return {};
}

}  // namespace

TEST(Config, Defaults) {
    const Config c;
    EXPECT_EQ(c.fusion.gamma, 0.25);
    EXPECT_EQ(c.fusion.delta, 0.5);
    EXPECT_EQ(c.fusion.voxel_size, 0.05);
    EXPECT_EQ(c.mask_thresholds, (std::vector<double>{1.0, 0.3, 0.5}));
    EXPECT_EQ(c.retrieval.mining.top_k, 10u);
    EXPECT_EQ(c.retrieval.n_bins, 8u);
    EXPECT_EQ(c.match_radius, 0.05);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, TextRoundTripAndStableHash) {
    Config c;
    c.set("fusion.gamma", "0.3");
    c.set("embedding.weights", "0.5, 0.2, 0.2, 0.1, 0.25");
    c.set("labeling.prompt_template", "a picture of a {}");
    c.set("gateway.endpoint", "https://example.invalid/v1");
    const auto text = c.to_text();
    const auto back = Config::parse(text);
    EXPECT_EQ(back.to_text(), text);
    EXPECT_EQ(back.hash(), c.hash());
    EXPECT_EQ(c.hash().size(), 16u);
    EXPECT_EQ(c.hash(), gateway::sha256_hex(text).substr(0, 16));
    EXPECT_NE(c.hash(), Config().hash());
    EXPECT_EQ(back.weights.surroundings, 0.25);
    EXPECT_EQ(back.prompt_template, "a picture of a {}");

    // Keys appear sorted, one per line.
    std::vector<std::string> keys;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        keys.push_back(text.substr(pos, text.find(' ', pos) - pos));
        pos = nl + 1;
    }
    EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
}

TEST(Config, CommentsAndBlankLines) {
    const auto c = Config::parse("# tuned\n\n  fusion.delta = 0.2  \nretrieval.top_k=3\n");
    EXPECT_EQ(c.fusion.delta, 0.2);
    EXPECT_EQ(c.retrieval.mining.top_k, 3u);
}

TEST(Config, ErrorsCarryOffsets) {
    auto e = catch_error([] { Config::parse("fusion.gamma = 0.3\nnot a setting\n", "x.cfg"); });
    EXPECT_EQ(e.code, ErrorCode::Format);
    EXPECT_NE(e.message.find("x.cfg: offset 19"), std::string::npos) << e.message;
    e = catch_error([] { Config::parse("fusion.gammma = 0.3\n", "x.cfg"); });
    EXPECT_EQ(e.code, ErrorCode::Format);
    EXPECT_NE(e.message.find("gammma"), std::string::npos) << e.message;
    e = catch_error([] { Config::parse("fusion.gamma = abc\n"); });
    EXPECT_EQ(e.code, ErrorCode::Format);
    EXPECT_EQ(catch_error([] { Config().set("nope", "1"); }).code, ErrorCode::InvalidArgument);
    EXPECT_EQ(catch_error([] { Config().set("embedding.weights", "1,2"); }).code, ErrorCode::InvalidArgument);
}

TEST(Config, Validation) {
    for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
             {"fusion.gamma", "0"},
             {"fusion.gamma", "1.5"},
             {"fusion.delta", "-0.1"},
             {"fusion.voxel_size", "0"},
             {"masks.thresholds", "0.5, 1.2"},
             {"masks.min_area_fraction", "1"},
             {"eval.match_radius", "0"},
             {"retrieval.top_k", "0"},
             {"retrieval.yaw_bins", "3"},
             {"labeling.prompt_template", "no placeholder"},
             {"gateway.timeout_s", "0"},
         }) {
        // Range checks run after the whole text parsed, so they are not format errors.
        const auto code = catch_error([&] { Config::parse(key + " = " + value + "\n"); }).code;
        EXPECT_EQ(code, ErrorCode::InvalidArgument) << key << " = " << value;
    }
}

TEST(Config, LoadFromFile) {
    fixtures::TempDir dir("config");
    std::ofstream(dir / "a.cfg") << "mock.seed = 42\n";
    EXPECT_EQ(Config::load(dir / "a.cfg").mock_seed, 42u);
    EXPECT_EQ(catch_error([&] { Config::load(dir / "missing.cfg"); }).code, ErrorCode::Io);
}

TEST(Config, ScheduleFromImageSize) {
    const Config c;
    const auto s = c.schedule(320, 240);
    EXPECT_EQ(s.thresholds, c.mask_thresholds);
    EXPECT_EQ(s.levels.size(), 3u);
    EXPECT_EQ(s.min_area, 39u);  // ceil(76800 * 0.0005) = ceil(38.4)
    EXPECT_EQ(s.margin_px, 1);
    EXPECT_EQ(c.schedule(10, 10).min_area, 1u);
}
