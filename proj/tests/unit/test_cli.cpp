#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "cpv/cli/cli.h"
#include "cpv/planner/dataset.h"

namespace fs = std::filesystem;
using namespace cpv;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cpv_run(std::initializer_list<std::string> args) {
    std::vector<std::string> owned{"cpv"};
    owned.insert(owned.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : owned) argv.push_back(s.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("cpv_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(cpv_run({}).code, cli::kExitUsage);
    EXPECT_EQ(cpv_run({"frobnicate"}).code, cli::kExitUsage);
    EXPECT_EQ(cpv_run({"train"}).code, cli::kExitUsage);
    EXPECT_EQ(cpv_run({"train", "--config", "/nonexistent.cfg"}).code, cli::kExitUsage);
    EXPECT_EQ(cpv_run({"eval", "--policy", "expert", "--criterion", "bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(cpv_run({"gen-data", "--pairs", "3", "--out", "x", "--bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(cpv_run({"gen-data", "--out", "x"}).code, cli::kExitUsage);
    EXPECT_EQ(cpv_run({"compose", "--policy", "expert", "--arm", "one,two"}).code, cli::kExitUsage);
    EXPECT_EQ(cpv_run({"eval"}).code, cli::kExitUsage);  // model policy without a checkpoint
    EXPECT_EQ(cpv_run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, GenDataIsDeterministicAcrossRunsAndWorkers) {
    const fs::path dir = temp_dir("gen");
    const auto a = cpv_run({"gen-data", "--seed", "42", "--pairs", "12", "--kmin", "1", "--kmax", "3", "--out",
                            (dir / "a.cpvd").string()});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_NE(a.out.find("seed = 42"), std::string::npos) << a.out;
    ASSERT_EQ(cpv_run({"gen-data", "--seed", "42", "--pairs", "12", "--kmin", "1", "--kmax", "3", "--out",
                       (dir / "b.cpvd").string()})
                  .code,
              0);
    ASSERT_EQ(cpv_run({"gen-data", "--seed", "42", "--pairs", "12", "--kmin", "1", "--kmax", "3", "--workers", "4",
                       "--out", (dir / "c.cpvd").string()})
                  .code,
              0);
    const auto bytes = slurp(dir / "a.cpvd");
    EXPECT_FALSE(bytes.empty());
    EXPECT_EQ(bytes, slurp(dir / "b.cpvd"));
    EXPECT_EQ(bytes, slurp(dir / "c.cpvd"));
    EXPECT_EQ(planner::load_dataset(dir / "a.cpvd").pairs.size(), 12u);
}

TEST(Cli, ReplayCheck) {
    const fs::path dir = temp_dir("replay");
    ASSERT_EQ(cpv_run({"gen-data", "--seed", "3", "--pairs", "8", "--kmin", "2", "--kmax", "3", "--out",
                       (dir / "d.cpvd").string()})
                  .code,
              0);
    const auto ok = cpv_run({"replay-check", "--dataset", (dir / "d.cpvd").string()});
    EXPECT_EQ(ok.code, 0) << ok.out;
    EXPECT_NE(ok.out.find("failed = 0"), std::string::npos);

    auto ds = planner::load_dataset(dir / "d.cpvd");
    auto& actions = ds.pairs[5].demo.actions;
    actions.back() = actions.back() == craft::Action::Up ? craft::Action::Down : craft::Action::Up;
    planner::save_dataset(ds, dir / "bad.cpvd");
    const auto bad = cpv_run({"replay-check", "--dataset", (dir / "bad.cpvd").string()});
    EXPECT_EQ(bad.code, cli::kExitFailure);
    EXPECT_NE(bad.out.find("FAIL pair 5:"), std::string::npos) << bad.out;
    EXPECT_EQ(bad.out.find("FAIL pair 4"), std::string::npos) << bad.out;
    EXPECT_NE(bad.out.find("failed = 1"), std::string::npos) << bad.out;

    planner::save_dataset(planner::Dataset{}, dir / "empty.cpvd");
    const auto empty = cpv_run({"replay-check", "--dataset", (dir / "empty.cpvd").string()});
    EXPECT_EQ(empty.code, 0);
    EXPECT_NE(empty.err.find("warning"), std::string::npos);

    EXPECT_EQ(cpv_run({"replay-check", "--dataset", (dir / "missing.cpvd").string()}).code, cli::kExitFailure);
}

TEST(Cli, TrainTwiceGivesIdenticalMetrics) {
    const fs::path dir = temp_dir("train");
    ASSERT_EQ(cpv_run({"gen-data", "--seed", "8", "--pairs", "10", "--kmin", "1", "--kmax", "2", "--out",
                       (dir / "d.cpvd").string()})
                  .code,
              0);
    for (const char* run : {"a", "b"}) {
        std::ofstream cfg(dir / (std::string(run) + ".cfg"));
        cfg << "dataset = " << (dir / "d.cpvd").string() << "\nembed_dim = 8\nbatch_size = 4\nepochs = 2\n"
            << "steps_per_epoch = 2\nprobe_batches = 1\naccuracy_samples = 20\n"
            << "checkpoint = " << (dir / run).string() << ".cpvm\nmetrics = " << (dir / run).string() << ".csv\n";
    }
    const auto a = cpv_run({"train", "--config", (dir / "a.cfg").string()});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_NE(a.out.find("embed_dim = 8"), std::string::npos) << a.out;
    ASSERT_EQ(cpv_run({"train", "--config", (dir / "b.cfg").string()}).code, 0);
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
    EXPECT_EQ(slurp(dir / "a.cpvm"), slurp(dir / "b.cpvm"));

    const auto ev = cpv_run({"eval", "--checkpoint", (dir / "a.cpvm").string(), "--skills", "1", "--episodes", "3",
                             "--horizon", "10", "--out", (dir / "r.csv").string()});
    ASSERT_EQ(ev.code, 0) << ev.err;
    const auto csv = slurp(dir / "r.csv");
    EXPECT_EQ(csv.rfind("condition,episodes,successes,rate,mean_steps\nskills1/contain,3,", 0), 0u) << csv;

    std::ofstream(dir / "broken.cfg") << "dataset = " << (dir / "d.cpvd").string() << "\nlr = -1\n";
    EXPECT_EQ(cpv_run({"train", "--config", (dir / "broken.cfg").string()}).code, cli::kExitUsage);
}

TEST(Cli, EvalAndComposeWithExpert) {
    const fs::path dir = temp_dir("eval");
    const auto e = cpv_run({"eval", "--policy", "expert", "--skills", "4", "--episodes", "5", "--workers", "2",
                            "--out", (dir / "e.csv").string()});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_NE(slurp(dir / "e.csv").find("skills4/contain,5,5,1.000000,"), std::string::npos) << slurp(dir / "e.csv");
    const auto c = cpv_run({"compose", "--policy", "expert", "--arm", "1+1", "--episodes", "4", "--criterion",
                            "exact"});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_NE(c.out.find("compose1+1/exact,4,4,1.000000,"), std::string::npos) << c.out;
}

TEST(Cli, RenderWritesPpm) {
    const fs::path dir = temp_dir("render");
    const auto r = cpv_run({"render", "--seed", "5", "--task", "ChopTree,BuildHouse", "--out",
                            (dir / "s.ppm").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ppm = slurp(dir / "s.ppm");
    EXPECT_EQ(ppm.rfind("P6\n30 33\n255\n", 0), 0u) << ppm.substr(0, 16);
    EXPECT_EQ(ppm.size(), std::string("P6\n30 33\n255\n").size() + 33u * 30u * 3u);
    EXPECT_EQ(cpv_run({"render", "--task", "Juggle", "--out", (dir / "x.ppm").string()}).code, cli::kExitUsage);
}

TEST(Cli, GradCheckPasses) {
    const auto r = cpv_run({"grad-check", "--dim", "16", "--coords", "3"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}
