#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "torusflow/scenario.hpp"

using namespace torusflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("torusflow_test_" + name);
    fs::remove_all(p);
    return p;
}

ScenarioConfig make(const std::string& cmd, const fs::path& out, std::map<std::string, std::string> kv = {}) {
    ScenarioConfig c(cmd);
    c.set("out", out.string());
    for (const auto& [k, v] : kv) c.set(k, v);
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(ScenarioConfig, GrammarAndHash) {
    ScenarioConfig a("integrate");
    a.load_text("# comment\nmetric = liouville\n  horizon=5   # trailing\n\nangle = 0.5\n");
    EXPECT_EQ(a.str("metric"), "liouville");
    EXPECT_EQ(a.real("horizon"), 5.0);
    ScenarioConfig b("integrate");
    b.set("angle", "0.5");
    b.set("horizon", "5");
    b.set("metric", "liouville");
    EXPECT_EQ(a.hash(), b.hash());
    b.set("out", "elsewhere");
    EXPECT_EQ(a.hash(), b.hash());
    b.set("horizon", "6");
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_THROW(a.load_text("nonsense = 1\n"), ValidationError);
    EXPECT_THROW(a.load_text("no equals sign\n"), ValidationError);
    EXPECT_THROW(ScenarioConfig("fly"), ValidationError);
}

TEST(ScenarioConfig, TypedAccessors) {
    ScenarioConfig c("axis");
    c.set("class", "2,-1");
    EXPECT_EQ(c.deck("class"), (DeckTransform{2, -1}));
    c.set("class", "1.5,0");
    EXPECT_THROW(c.deck("class"), ValidationError);
    c.set("oracle", "maybe");
    EXPECT_THROW(c.flag("oracle"), ValidationError);
    c.set("nodes", "-3");
    EXPECT_THROW(c.count("nodes"), ValidationError);
}

TEST(ScenarioConfig, OutputDirectoryFromEnvironment) {
    ::setenv(kOutputDirEnv, "/tmp/tf_env_dir", 1);
    EXPECT_EQ(ScenarioConfig("integrate").str("out"), "/tmp/tf_env_dir");
    ::unsetenv(kOutputDirEnv);
    EXPECT_EQ(ScenarioConfig("integrate").str("out"), "torusflow_out");
}

TEST(Scenario, IntegrateFlatEndpoint) {
    const fs::path out = scratch("integrate");
    const ScenarioConfig cfg = make("integrate", out, {{"angle", "0.927295218"}, {"horizon", "10"}});
    const RunResult r = run_scenario(cfg);
    ASSERT_EQ(r.exit_code, 0) << r.message;
    const json& end = r.summary["result"]["endpoint"];
    EXPECT_NEAR(end[0].get<double>(), 6.0, 1e-8);
    EXPECT_NEAR(end[1].get<double>(), 8.0, 1e-8);
    EXPECT_EQ(r.summary["result"]["metric_certificate"], "verified");
    const std::string csv = slurp(out / "trajectory.csv");
    EXPECT_NE(csv.find("config_hash=" + cfg.hash()), std::string::npos);
    const json doc = json::parse(slurp(out / "integrate.json"));
    EXPECT_EQ(doc["config"]["config_hash"], cfg.hash());
    // Last CSV row ends at (6, 8).
    const auto last = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
    double t, x, y;
    char comma;
    std::istringstream row(last);
    row >> t >> comma >> x >> comma >> y;
    EXPECT_NEAR(x, 6.0, 1e-8);
    EXPECT_NEAR(y, 8.0, 1e-8);
}

TEST(Scenario, ValidationAndNumericalFailuresWriteManifest) {
    const fs::path out = scratch("fail");
    const RunResult v = run_scenario(make("axis", out, {{"class", "2,2"}}));
    EXPECT_EQ(v.exit_code, 1);
    const json m = json::parse(slurp(out / "failure.json"));
    EXPECT_EQ(m["exit_code"], 1);
    EXPECT_EQ(m["error"], "validation");

    const RunResult bad_metric = run_scenario(make("integrate", out, {{"metric", "no/such/file"}}));
    EXPECT_EQ(bad_metric.exit_code, 1);

    // sample_dt so small that the sample budget is exceeded: validation.
    const RunResult budget = run_scenario(make("integrate", out, {{"sample_dt", "1e-9"}}));
    EXPECT_EQ(budget.exit_code, 1);

    // Too short to escape: numerical.
    const RunResult n = run_scenario(make("strip", out, {{"metric", "flat"}, {"horizon", "2"}}));
    EXPECT_EQ(n.exit_code, 2);
    EXPECT_EQ(json::parse(slurp(out / "failure.json"))["error"], "numerical");
}

TEST(Scenario, FlatnessOnConformalBump) {
    const fs::path out = scratch("flatness");
    const RunResult r = run_scenario(make("flatness", out, {{"metric", "conformal-bump"}, {"samples", "4"}}));
    ASSERT_EQ(r.exit_code, 0) << r.message;
    EXPECT_EQ(r.summary["result"]["verdict"], "non-flat");
    EXPECT_GT(r.summary["result"]["curvature"]["max_abs"].get<double>(), 1.0);
}

TEST(Scenario, EntropyCustomAndReport) {
    const fs::path out = scratch("entropy");
    const ScenarioConfig cfg = make("entropy", out, {{"preset", "custom"}, {"M", "128"}, {"horizons", "5,10"}, {"epsilons", "0.5"}});
    const RunResult a = run_scenario(cfg);
    ASSERT_EQ(a.exit_code, 0) << a.message;
    const json& res = a.summary["result"];
    EXPECT_EQ(res["protocol"]["M"], 128);
    EXPECT_TRUE(res["flags"].is_array());
    EXPECT_NE(slurp(out / "entropy.csv").find("epsilon,T,r,log_r"), std::string::npos);
    const RunResult b = run_scenario(cfg);
    EXPECT_EQ(a.summary["result"]["grid"], b.summary["result"]["grid"]);

    ASSERT_EQ(run_scenario(make("integrate", out)).exit_code, 0);
    const RunResult rep = run_scenario(make("report", out));
    ASSERT_EQ(rep.exit_code, 0) << rep.message;
    EXPECT_TRUE(rep.summary["result"]["outputs"].contains("entropy"));
    EXPECT_TRUE(rep.summary["result"]["outputs"].contains("integrate"));
    EXPECT_EQ(run_scenario(make("report", scratch("empty"))).exit_code, 1);
}

TEST(Scenario, IntersectionsAndCsfOutputs) {
    const fs::path out = scratch("ix");
    const RunResult r = run_scenario(make("intersections", out, {{"metric", "two-frequency"}, {"x", "0.1"}, {"y", "0.3"},
                                                               {"angle", "0.4"}, {"horizon", "40"}, {"ladder", "10,20,40"},
                                                               {"class_radius", "1"}}));
    ASSERT_EQ(r.exit_code, 0) << r.message;
    EXPECT_NE(slurp(out / "intersections.csv").find("t1,t2,x,y,sign,margin,kind"), std::string::npos);
    const json iset = json::parse(slurp(out / "iset.json"));
    EXPECT_EQ(iset["ladder"].size(), 3u);
    EXPECT_TRUE(iset["counts"].is_object());
    EXPECT_TRUE(iset["counts"].contains("1/0"));
    const RunResult c = run_scenario(make("csf", out, {{"r", "0.1"}, {"nodes", "128"}}));
    ASSERT_EQ(c.exit_code, 0) << c.message;
    EXPECT_EQ(c.summary["result"]["verdict"], "shrank_to_point");
    EXPECT_TRUE(fs::exists(out / "csf_log.csv"));
}
