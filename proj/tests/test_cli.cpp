#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "egibbs/cli/runner.hpp"

using namespace egibbs;
using namespace egibbs::cli;
namespace fs = std::filesystem;

namespace {

std::string error_code(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class ToolRun : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("egibbs_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return dir / name;
    }

    /// Runs the tool and returns its exit status.
    int tool(const std::string& args, const std::string& env = "") {
        std::string cmd = env + " " + EGIBBS_TOOL_PATH + " " + args + " > " + (dir / "stdout.txt").string() + " 2>&1";
        int rc = std::system(cmd.c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    }
};

const char* kMinimal = R"({
  "graph": {"generator": "chain", "size": 3},
  "manifold": {"points": 2},
  "grid": {"slices": 2},
  "potentials": {"constant": 0.1},
  "rng": {"seed": 42}
})";

} // namespace

TEST(ParseConfig, MinimalConfigResolvesDefaults) {
    auto cfg = parse_config(kMinimal);
    EXPECT_EQ(cfg.text("graph.generator"), "chain");
    EXPECT_EQ(cfg.integer("grid.slices"), 2);
    EXPECT_EQ(cfg.seed(), 42u);
    EXPECT_DOUBLE_EQ(cfg.real("cert.threshold"), 1e-3);
    EXPECT_EQ(cfg.list<std::size_t>("cert.radius_list"), (std::vector<std::size_t>{1, 2, 3}));
    EXPECT_TRUE(cfg.given("potentials.constant"));
    EXPECT_FALSE(cfg.given("cert.lmax"));
    EXPECT_TRUE(cfg.resolved.contains("volume.lambda"));
}

TEST(ParseConfig, Errors) {
    EXPECT_EQ(error_code(R"({"grid": {"slices": 0}})"), "cli_runner.RangeViolation");
    EXPECT_EQ(error_code(R"({"grid": {"slices": "two"}})"), "cli_runner.TypeError");
    EXPECT_EQ(error_code(R"({"graph": {"generator": "torus"}})"), "cli_runner.RangeViolation");
    EXPECT_EQ(error_code(R"({"potentials": {"constant": 0.1, "product": 0.2}})"), "cli_runner.ConflictingKeys");
    EXPECT_EQ(error_code(R"({"graph": {"file": "/nonexistent/edges.txt"}})"), "cli_runner.MissingFile");
    EXPECT_EQ(error_code("{not json"), "cli_runner.ParseError");
    EXPECT_EQ(error_code(R"({"rng": {"seed": -1}})"), "cli_runner.RangeViolation");
}

TEST(ParseConfig, UnknownKeySuggestsClosest) {
    try {
        parse_config(R"({"potentails": {"file": "x"}})");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "cli_runner.UnknownKey");
        EXPECT_NE(std::string(e.what()).find("potentials.file"), std::string::npos);
    }
}

TEST(Run, ReportCarriesInterpretationFlags) {
    auto rep = run("dlr-verify", parse_config(kMinimal));
    EXPECT_EQ(rep.exit_status, kPass);
    const auto& flags = rep.report.at("interpretation");
    EXPECT_TRUE(flags.contains("path_weight_product"));
    EXPECT_TRUE(flags.contains("path_sum_domain"));
    EXPECT_NEAR(flags.at("bridge_normalization").at("constant").get<double>(), 1.3678794411714423, 1e-13);
    EXPECT_EQ(rep.report.at("schema_version"), kSchemaVersion);
    EXPECT_FALSE(rep.report.contains("wall_seconds"));
}

TEST(Run, DlrVerifyFreeChain) {
    auto rep = run("dlr-verify", parse_config(R"({"graph": {"generator": "chain", "size": 3}})"));
    EXPECT_EQ(rep.exit_status, kPass);
    for (const auto& row : rep.report["results"]["defects"]) EXPECT_LT(row["defect"].get<double>(), 1e-12);
    ASSERT_EQ(rep.tables.size(), 1u);
    EXPECT_EQ(rep.tables[0].content.substr(0, 14), "lambda,defect\n");
}

TEST(Run, CertificateDivergent) {
    auto rep = run("certificate", parse_config(R"({"graph": {"generator": "cycle", "size": 6},
        "potentials": {"constant": 0.05}, "cert": {"radius_list": [3]}})"));
    EXPECT_EQ(rep.exit_status, kFail);
    EXPECT_EQ(rep.report["results"]["verdict"], "uncertified (divergent series)");
}

TEST(Run, ModuleErrorsAreQualified) {
    auto rep = run("certificate", parse_config(R"({"graph": {"generator": "chain", "size": 3},
        "volume": {"lambda": [17]}})"));
    EXPECT_EQ(rep.exit_status, kError);
    EXPECT_EQ(rep.report["error"]["code"], "graph_core.UnknownVertex");
    auto missing = run("random-potentials", parse_config(kMinimal));
    EXPECT_EQ(missing.exit_status, kError);
    EXPECT_EQ(missing.report["error"]["code"], "cli_runner.MissingRequired");
    EXPECT_EQ(run("nonsense", parse_config(kMinimal)).exit_status, kError);
}

TEST(Run, PotentialFile) {
    std::istringstream in("# edge block\nedge 0 1\n0.1 0.2\n0.2 -0.3\n");
    auto v = parse_potential_file(in, 2);
    ASSERT_NE(v.find(Edge(0, 1)), nullptr);
    EXPECT_DOUBLE_EQ(v.norm(Edge(0, 1)), 0.3);
    std::istringstream truncated("edge 0 1\n0.1 0.2\n");
    EXPECT_THROW(parse_potential_file(truncated, 2), Error);
    std::istringstream asym("edge 0 1\n0.1 0.2\n0.5 0.1\n");
    EXPECT_THROW(parse_potential_file(asym, 2), Error);
}

TEST_F(ToolRun, ExitCodesAndOutputs) {
    auto cfg = write("min.json", kMinimal);
    EXPECT_EQ(tool("dlr-verify --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "a" / "report.json"));
    EXPECT_TRUE(fs::exists(dir / "a" / "timings.json"));
    EXPECT_TRUE(fs::exists(dir / "a" / "dlr_defects.csv"));

    auto div = write("div.json", R"({"graph": {"generator": "cycle", "size": 6},
        "potentials": {"constant": 0.05}, "cert": {"radius_list": [3]}})");
    EXPECT_EQ(tool("certificate --config " + div.string() + " --out " + (dir / "b").string()), 1);

    auto bad = write("bad.json", R"({"grid": {"slices": 0}})");
    EXPECT_EQ(tool("semigroup --config " + bad.string() + " --out " + (dir / "c").string()), 2);
    auto err = json::parse(read_file(dir / "c" / "report.json"));
    EXPECT_EQ(err["error"]["code"], "cli_runner.RangeViolation");

    EXPECT_EQ(tool("semigroup --config " + (dir / "absent.json").string()), 2);
}

TEST_F(ToolRun, ReportsAreByteIdentical) {
    auto cfg = write("rp.json", R"({"graph": {"generator": "chain", "size": 6},
        "ensemble": {"family": "two_point", "params": {"p_high": 0.2}},
        "thm2": {"trials": 20, "required_fraction": 0.0}, "rng": {"seed": 5}})");
    ASSERT_EQ(tool("random-potentials --config " + cfg.string() + " --out " + (dir / "x").string()), 0);
    ASSERT_EQ(tool("random-potentials --config " + cfg.string() + " --out " + (dir / "y").string()), 0);
    EXPECT_EQ(read_file(dir / "x" / "report.json"), read_file(dir / "y" / "report.json"));
    EXPECT_EQ(read_file(dir / "x" / "random_potentials.csv"), read_file(dir / "y" / "random_potentials.csv"));
}

TEST_F(ToolRun, SeedPrecedence) {
    auto cfg = write("s.json", R"({"graph": {"generator": "chain", "size": 3}, "boundary": {"kind": "sampled"},
        "potentials": {"random_norm": 0.3}, "rng": {"seed": 1}})");
    auto seed_in = [&](const std::string& sub) {
        return json::parse(read_file(dir / sub / "report.json"))["seed"].get<std::uint64_t>();
    };
    ASSERT_EQ(tool("dlr-verify --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
    EXPECT_EQ(seed_in("a"), 1u);
    ASSERT_EQ(tool("dlr-verify --config " + cfg.string() + " --out " + (dir / "b").string(), "TOOL_SEED=9"), 0);
    EXPECT_EQ(seed_in("b"), 9u);
    ASSERT_EQ(tool("dlr-verify --config " + cfg.string() + " --seed 4 --out " + (dir / "c").string(), "TOOL_SEED=9"),
              0);
    EXPECT_EQ(seed_in("c"), 4u);
    EXPECT_EQ(tool("dlr-verify --config " + cfg.string() + " --out " + (dir / "d").string(), "TOOL_SEED=abc"), 2);
}
