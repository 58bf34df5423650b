#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = SETGAN_CLI_PATH;

fs::path work_dir() {
    const auto dir = fs::temp_directory_path() / "setgan_test_cli";
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd =
        env + (env.empty() ? "" : " ") + kCli + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Cli, HelpExitsZero) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run("report --help"), 0);
}

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run(""), 1);                         // missing subcommand
    EXPECT_EQ(run("no-such-command"), 1);          // unknown subcommand
    EXPECT_EQ(run("report --kind sample"), 1);     // missing required option
    EXPECT_EQ(run("prep --input /nope"), 1);       // missing required output
}

TEST(Cli, UnknownReportKindExitsOne) {
    // kind validation fires before the checkpoint is touched
    EXPECT_EQ(run("report --checkpoint /nonexistent.ckpt --kind frobnicate"), 1);
}

TEST(Cli, DataErrorsExitTwo) {
    const auto dir = work_dir();
    const auto cfg_path = dir / "cfg.json";
    ASSERT_EQ(run("init-config --out " + cfg_path.string()), 0);
    // config points at a dataset that does not exist
    {
        std::ifstream is(cfg_path);
        json j;
        is >> j;
        j["dataset"] = (dir / "missing_dataset").string();
        j["run_dir"] = (dir / "run").string();
        std::ofstream os(cfg_path, std::ios::trunc);
        os << j.dump(2);
    }
    EXPECT_EQ(run("train --config " + cfg_path.string()), 2);
    // report on a missing checkpoint is a data error
    EXPECT_EQ(run("report --checkpoint /nonexistent.ckpt --kind sample"), 2);
    // prep over an empty input directory is a data error
    const auto empty = dir / "empty_in";
    fs::create_directories(empty);
    EXPECT_EQ(run("prep --input " + empty.string() + " --output " + (dir / "out").string()), 2);
}

TEST(Cli, UnsupportedDeviceExitsOne) {
    EXPECT_EQ(run("init-config --out " + (work_dir() / "dev.json").string(),
                  "SETGAN_DEVICE=cuda"),
              1);
    EXPECT_EQ(run("init-config --out " + (work_dir() / "dev.json").string(),
                  "SETGAN_DEVICE=cpu"),
              0);
}

TEST(Cli, InitConfigEmitsLoadableDefaults) {
    const auto path = work_dir() / "defaults.json";
    ASSERT_EQ(run("init-config --out " + path.string()), 0);
    std::ifstream is(path);
    json j;
    is >> j;
    EXPECT_EQ(j.at("layout").at("d_content").get<int>(), 60);
    EXPECT_EQ(j.at("layout").at("d_motion").get<int>(), 40);
    EXPECT_EQ(j.at("layout").at("set_size").get<int>(), 3);
    EXPECT_EQ(j.at("generator").at("out_channels").get<int>(), 1);
    EXPECT_EQ(j.at("train").at("loss_mode").get<std::string>(), "nonsaturating");
    EXPECT_DOUBLE_EQ(j.at("train").at("lr_g").get<double>(), 2e-4);
    EXPECT_DOUBLE_EQ(j.at("train").at("beta1").get<double>(), 0.5);
}

TEST(Cli, SynthGenWritesLoadableCorpus) {
    const auto out = work_dir() / "corpus";
    fs::remove_all(out);
    ASSERT_EQ(run("synth-gen --out " + out.string() +
                  " --identities 3 --clips 2 --frames 4 --side 32 --seed 5"),
              0);
    EXPECT_TRUE(fs::exists(out / "manifest.jsonl"));
    EXPECT_TRUE(fs::exists(out / "id0000_clip0000" / "000000.png"));
    EXPECT_TRUE(fs::exists(out / "id0000_clip0000" / "factors.json"));
}
