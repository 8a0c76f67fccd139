// Drives the ovseg-cli binary end to end.
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;  // stdout and stderr together
};

Run cli(const std::string& args) {
    const std::string cmd = std::string("\"") + OVSEG_CLI_PATH + "\" " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Tmp {
    fs::path path;
    Tmp() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("ovseg_cli_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~Tmp() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const std::string& n) const { return (path / n).string(); }
};

}  // namespace

TEST(Cli, HelpAndBadUsage) {
    auto r = cli("--help");
    EXPECT_EQ(r.code, 0);
    for (const char* sub : {"synth", "fuse", "segment-eval", "retrieve", "retrieve-eval", "inspect"})
        EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
    EXPECT_NE(cli("fuse").code, 0);  // --scene and --out are required
    EXPECT_NE(cli("frobnicate").code, 0);
}

TEST(Cli, SynthFuseEvaluate) {
    Tmp tmp;
    auto r = cli("synth --seed 4 --objects 3 --frames 5 --out " + tmp / "s");
    ASSERT_EQ(r.code, 0) << r.out;
    ASSERT_TRUE(fs::exists(tmp / "s/manifest.json"));

    r = cli("fuse --scene " + tmp / "s/manifest.json" + " --out " + tmp / "a.ovom");
    ASSERT_EQ(r.code, 0) << r.out;
    r = cli("fuse --scene " + tmp / "s/manifest.json" + " --out " + tmp / "b.ovom");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(slurp(tmp / "a.ovom"), slurp(tmp / "b.ovom"));

    r = cli("inspect --objects " + tmp / "a.ovom");
    EXPECT_EQ(r.code, 0) << r.out;
    r = cli("inspect --scene " + tmp / "s/manifest.json");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("5 frames"), std::string::npos) << r.out;

    r = cli("segment-eval --scene " + tmp / "s/manifest.json" + " --objects " + tmp / "a.ovom" + " --out " +
            tmp / "eval");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto kv = slurp(tmp / "eval/metrics.kv");
    EXPECT_NE(kv.find("mIoU"), std::string::npos) << kv;
    EXPECT_NE(slurp(tmp / "eval/metrics.txt").find("1.0000"), std::string::npos);
}

TEST(Cli, OverridesChangeTheResult) {
    Tmp tmp;
    ASSERT_EQ(cli("synth --seed 4 --objects 3 --frames 5 --out " + tmp / "s").code, 0);
    ASSERT_EQ(cli("fuse --scene " + tmp / "s/manifest.json" + " --out " + tmp / "a.ovom").code, 0);
    auto r = cli("fuse --voxel-size 0.1 --scene " + tmp / "s/manifest.json" + " --out " + tmp / "b.ovom");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(slurp(tmp / "a.ovom"), slurp(tmp / "b.ovom"));
    r = cli("fuse --set fusion.gamma=7 --scene " + tmp / "s/manifest.json" + " --out " + tmp / "c.ovom");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("error: INVALID_ARGUMENT"), std::string::npos) << r.out;
}

TEST(Cli, ErrorsNameTheStatus) {
    Tmp tmp;
    auto r = cli("fuse --scene " + tmp / "missing/manifest.json" + " --out " + tmp / "x.ovom");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("error: IO_ERROR"), std::string::npos) << r.out;
    EXPECT_FALSE(fs::exists(tmp / "x.ovom"));

    std::ofstream(tmp / "bad.ovom") << "not an object map";
    r = cli("inspect --objects " + tmp / "bad.ovom");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("error: FORMAT_ERROR"), std::string::npos) << r.out;
}

TEST(Cli, RetrieveRecordReplay) {
    Tmp tmp;
    ASSERT_EQ(cli("synth --grounding --seed 3 --out " + tmp / "root/ground_3").code, 0);
    const std::string q = "\"the chair closest to the ball\"";
    auto rec = cli("retrieve --scene " + tmp / "root/ground_3/manifest.json" + " --query " + q + " --record " +
                   tmp / "log.ovrl");
    ASSERT_EQ(rec.code, 0) << rec.out;
    EXPECT_NE(rec.out.find("object "), std::string::npos) << rec.out;
    auto rep = cli("retrieve --gateway replay --replay " + tmp / "log.ovrl" + " --scene " +
                   tmp / "root/ground_3/manifest.json" + " --query " + q);
    ASSERT_EQ(rep.code, 0) << rep.out;
    EXPECT_EQ(rep.out, rec.out);

    auto r = cli("retrieve-eval --queries " + tmp / "root/ground_3/queries.tsv" + " --root " + tmp / "root" +
                 " --out " + tmp / "out");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("A@0.25 1.0000"), std::string::npos) << r.out;
    EXPECT_TRUE(fs::exists(tmp / "out/results.tsv"));
    EXPECT_TRUE(fs::exists(tmp / "root/ground_3/objects.ovom"));
}
