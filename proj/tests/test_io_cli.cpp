#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "fedbatch/app/commands.hpp"

using namespace fedbatch;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("fedbatch_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& f) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& f, const std::string& s) { std::ofstream(f, std::ios::binary) << s; }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FEDBATCH_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kBase = R"({"version": 1,
  "process": {"S_in": 10, "S_ref": 0.1, "V_max": 50, "Q_max": 5, "M0": 170, "y": 5},
  "growth": {"terms": [{"mu_bar": 0.44, "K": 1.7, "L": 0.04}, {"mu_bar": 1.55, "K": 90, "L": 0.36}]})";

io::json base() { return io::json::parse(std::string(kBase) + "}"); }

}  // namespace

TEST(Config, ParsesInlineAndFileGrowth) {
    const auto c = io::parse_config(base());
    EXPECT_EQ(c.growth.terms().size(), 2u);
    EXPECT_EQ(c.process.M0, 170.0);
    const auto from_file = io::load_config(std::string(FEDBATCH_CONFIGS) + "/example2.json");
    EXPECT_EQ(from_file.growth.terms().size(), 2u);
    EXPECT_EQ(from_file.report.epsilons.size(), 3u);
    EXPECT_EQ(from_file.curve_i.V0.size(), 7u);
    EXPECT_EQ(from_file.curve_i.V0.front(), 35.0);
    EXPECT_EQ(from_file.curve_i.V0.back(), 50.0);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    auto j = base();
    j["extra"] = 1;
    EXPECT_THROW(io::parse_config(j), ConfigError);
    j = base();
    j["process"]["Vmax"] = 3;
    EXPECT_THROW(io::parse_config(j), ConfigError);
    j = base();
    j["version"] = 2;
    EXPECT_THROW(io::parse_config(j), ConfigError);
    j = base();
    j["growth"]["terms"] = io::json::array();
    EXPECT_THROW(io::parse_config(j), ConfigError);
    j = base();
    j["field"] = {{"epsilon", 0}};
    EXPECT_THROW(io::parse_config(j), ConfigError);
    j = base();
    j["simulate"] = {{"policy", {{"kind", "magic"}}}};
    EXPECT_THROW(io::parse_config(j), ConfigError);
    j = base();
    j["process"]["S_ref"] = 20;
    EXPECT_THROW(io::parse_config(j), ConfigError);
    EXPECT_THROW(io::load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, PolicyArcIndexResolves) {
    auto j = base();
    j["simulate"] = {{"policy", {{"kind", "singular_synthesis"}, {"arc", 2}}}};
    const auto c = io::parse_config(j);
    const auto pol = io::make_policy(c.simulate.policy, c.growth, c.process);
    EXPECT_NEAR(pol.value(), 5.30327, 1e-5);
    j["simulate"]["policy"]["arc"] = 3;
    const auto bad = io::parse_config(j);
    EXPECT_THROW(io::make_policy(bad.simulate.policy, bad.growth, bad.process), ConfigError);
}

TEST(Json, SeventeenDigits) {
    EXPECT_EQ(io::number17(0.1), "0.10000000000000001");
    EXPECT_EQ(io::number17(std::nan("")), "null");
    const std::string s = io::dump17({{"a", 1.0 / 3.0}, {"b", 2}, {"c", {1.5, true}}});
    EXPECT_NE(s.find("0.33333333333333331"), std::string::npos);
    EXPECT_EQ(io::json::parse(s)["b"], 2);
}

TEST(Commands, MuGridRowCount) {
    auto j = base();
    j["inspect"] = {{"resolution", 137}};
    const auto out = app::cmd_inspect(io::parse_config(j));
    const std::string* csv = out.find("mu_grid.csv");
    ASSERT_NE(csv, nullptr);
    EXPECT_EQ(std::count(csv->begin(), csv->end(), '\n'), 1 + 138);
}

TEST(Cli, InspectTwoHumps) {
    const auto d = scratch("inspect");
    ASSERT_EQ(run_cli("inspect --config " FEDBATCH_CONFIGS "/two_humps.json --out " + d.string()), 0);
    const auto r = io::json::parse(slurp(d / "growth_report.json"));
    EXPECT_EQ(r["critical_points"]["maxima"].size(), 2u);
    EXPECT_FALSE(r["assumptions"]["assumption3"]["holds"].get<bool>());
    const auto csv = slurp(d / "mu_grid.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 1001);
}

TEST(Cli, ConfigErrorsExitTwo) {
    const auto d = scratch("config");
    auto j = base();
    j["growth"]["terms"] = io::json::array();
    spit(d / "empty.json", j.dump());
    EXPECT_EQ(run_cli("inspect --config " + (d / "empty.json").string() + " --out " + d.string()), 2);
    EXPECT_EQ(run_cli("inspect --config " + (d / "missing.json").string()), 2);
    spit(d / "broken.json", "{\"version\": 1,");
    EXPECT_EQ(run_cli("inspect --config " + (d / "broken.json").string()), 2);
    EXPECT_EQ(run_cli("--config " FEDBATCH_CONFIGS "/two_humps.json"), 2);
}

TEST(Cli, CheckAssumptionsIsOneDocument) {
    const auto d = scratch("assume");
    ASSERT_EQ(run_cli("check-assumptions --config " FEDBATCH_CONFIGS "/example2.json --out " + d.string()), 0);
    const auto r = io::json::parse(slurp(d / "assumptions.json"));
    EXPECT_TRUE(r.contains("assumption1"));
    EXPECT_TRUE(r["assumption2"]["holds"].get<bool>());
    EXPECT_TRUE(r["assumption3"]["holds"].get<bool>());
}

TEST(Cli, SimulateSummaries) {
    const auto d = scratch("simulate");
    auto j = base();
    j["simulate"] = {{"policy", {{"kind", "singular_synthesis"}, {"arc", 2}}}, {"initial", {{"S", 0.1}, {"V", 50}}}};
    spit(d / "at_target.json", j.dump());
    ASSERT_EQ(run_cli("simulate --config " + (d / "at_target.json").string() + " --out " + (d / "a").string()), 0);
    EXPECT_EQ(io::json::parse(slurp(d / "a" / "summary.json"))["T"].get<double>(), 0.0);

    const ProcessParams p;
    const GrowthModel m({{0.44, 1.7, 0.04}, {1.55, 90, 0.36}});
    const double S2 = find_local_maxima(m, 0.0, p.S_in).maxima[1].S_bar;
    j["simulate"]["initial"] = {{"S", S2}, {"V", 25}};
    spit(d / "arc.json", io::dump17(j));
    ASSERT_EQ(run_cli("simulate --config " + (d / "arc.json").string() + " --out " + (d / "b").string()), 0);
    const auto s = io::json::parse(slurp(d / "b" / "summary.json"));
    const double arc = singular_duration(p, m, S2, 25.0, p.V_max);
    EXPECT_NEAR(s["phases"]["arc"].get<double>(), arc, 1e-6 * arc);
    const auto csv = slurp(d / "b" / "trajectory.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,S,V,Q");

    j["simulate"]["initial"] = {{"S", 12}, {"V", 25}};
    spit(d / "outside.json", j.dump());
    EXPECT_EQ(run_cli("simulate --config " + (d / "outside.json").string() + " --out " + (d / "c").string()), 4);

    j["simulate"]["initial"] = {{"S", 2}, {"V", 25}};
    j["simulate"]["t_max"] = 0.5;
    spit(d / "short.json", j.dump());
    EXPECT_EQ(run_cli("simulate --config " + (d / "short.json").string() + " --out " + (d / "e").string()), 3);
}

TEST(Cli, FullDynamicsTrajectory) {
    const auto d = scratch("full");
    auto j = base();
    j["simulate"] = {{"policy", {{"kind", "constant"}, {"Q", 2}}},
                     {"initial", {{"S", 3}, {"V", 20}}},
                     {"dynamics", "full"},
                     {"stop", {{"at_Vmax", true}}}};
    spit(d / "c.json", j.dump());
    ASSERT_EQ(run_cli("simulate --config " + (d / "c.json").string() + " --out " + d.string()), 0);
    const auto csv = slurp(d / "trajectory.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,S,B,V,Q");
    EXPECT_NEAR(io::json::parse(slurp(d / "summary.json"))["T"].get<double>(), 15.0, 1e-9);
}

TEST(Cli, FieldFilesAndIndex) {
    const auto d = scratch("field");
    auto j = base();
    j["field"] = {{"epsilon", 0.01}, {"alpha", {{"mode", "uniform"}, {"count", 8}}}};
    spit(d / "c.json", j.dump());
    ASSERT_EQ(run_cli("field --threads 2 --config " + (d / "c.json").string() + " --out " + d.string()), 0);
    const auto idx = io::json::parse(slurp(d / "field_index_e0.01.json"));
    ASSERT_EQ(idx["extremals"].size(), 8u);
    for (const auto& e : idx["extremals"]) {
        const std::string f = e["file"];
        EXPECT_TRUE(fs::exists(d / f)) << f;
        EXPECT_EQ(f.rfind("extremal_a", 0), 0u);
    }
}

TEST(Cli, ReportSingleArcHasNoCrossings) {
    const auto d = scratch("report1");
    ASSERT_EQ(run_cli("report --threads 4 --config " FEDBATCH_CONFIGS "/example1.json --out " + d.string()), 0);
    const auto r = io::json::parse(slurp(d / "synthesis_report.json"));
    EXPECT_TRUE(r["intersections"].empty());
    EXPECT_TRUE(r["B_hull"].empty());
}

TEST(Cli, ReportTwoArcsIsDeterministic) {
    const auto a = scratch("report2a");
    const auto b = scratch("report2b");
    ASSERT_EQ(run_cli("report --threads 4 --config " FEDBATCH_CONFIGS "/example2.json --out " + a.string()), 0);
    ASSERT_EQ(run_cli("report --config " FEDBATCH_CONFIGS "/example2.json --out " + b.string() + " --seed 7"), 0);
    const auto ra = slurp(a / "synthesis_report.json");
    EXPECT_EQ(ra, slurp(b / "synthesis_report.json"));
    EXPECT_EQ(slurp(a / "curve_I.csv"), slurp(b / "curve_I.csv"));
    const auto r = io::json::parse(ra);
    EXPECT_FALSE(r["intersections"].empty());
    EXPECT_FALSE(r["B_hull"].empty());
    EXPECT_FALSE(r["curve_I"]["samples"].empty());
    const auto csv = slurp(a / "curve_I.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "V0,S_star,T,residual");
}

TEST(Cli, CurveICommand) {
    const auto d = scratch("curve");
    ASSERT_EQ(run_cli("curve-i --config " FEDBATCH_CONFIGS "/example2.json --out " + d.string()), 0);
    const auto j = io::json::parse(slurp(d / "curve_I.json"));
    EXPECT_FALSE(j["samples"].empty());
    EXPECT_EQ(run_cli("curve-i --config " FEDBATCH_CONFIGS "/example1.json --out " + d.string()), 4);
}
