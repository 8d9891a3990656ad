#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "dob/benchmarks.hpp"
#include "dob/io.hpp"

namespace fs = std::filesystem;
using dob::io::Json;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("dob_cli_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const Json& j) const {
        std::ofstream(path(name)) << j.dump(2);
        return path(name);
    }

    static std::string read(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    int run(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return dob::cli::run(args, out_, err_);
    }

    std::ostringstream out_;
    std::ostringstream err_;
    fs::path dir_;
};

Json analyze_config(const dob::bench::LinearBenchmark& b, const std::string& grid = "1e-1:1e-4:log10") {
    return {{"family", dob::io::to_json(b.family)},
            {"nominal", dob::io::to_json(b.nominal)},
            {"controller", dob::io::to_json(b.controller)},
            {"qfilter", dob::io::to_json(b.qspec)},
            {"tau_grid", grid},
            {"samples", 50},
            {"log_level", "quiet"}};
}

Json loop_config(double tau) {
    const auto b = dob::bench::b1();
    auto q = b.qspec;
    q.tau = tau;
    return {{"plant", dob::io::to_json(b.nominal.transfer())},
            {"nominal", dob::io::to_json(b.nominal.transfer())},
            {"controller", dob::io::to_json(b.controller)},
            {"qfilter", dob::io::to_json(q)}};
}

std::vector<double> column(const std::string& csv, const std::string& name) {
    std::istringstream in(csv);
    std::string line, cell;
    std::getline(in, line);
    std::istringstream header(line);
    int idx = -1;
    for (int i = 0; std::getline(header, cell, ','); ++i)
        if (cell == name) idx = i;
    EXPECT_GE(idx, 0) << name;
    std::vector<double> out;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        for (int i = 0; std::getline(row, cell, ','); ++i)
            if (i == idx) out.push_back(std::stod(cell));
    }
    return out;
}

}  // namespace

TEST_F(CliTest, HelpAndUnknownCommand) {
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_NE(out_.str().find("compare-transient"), std::string::npos);
    EXPECT_EQ(run({"analyze", "--help"}), 0);
    EXPECT_EQ(run({"frobnicate"}), 1);
    EXPECT_EQ(run({}), 1);
}

TEST_F(CliTest, DesignQDegenerateGainsEchoA0) {
    const auto cfg = write("q.json", {{"nu", 2}, {"a_tail", {1.0}}, {"gains", {{"g_lower", 1}, {"g_upper", 1}, {"g_star", 1}}},
                                      {"a0_initial", 0.5}});
    ASSERT_EQ(run({"design-q", "--config", cfg}), 0) << err_.str();
    const auto report = Json::parse(out_.str());
    EXPECT_EQ(report["a0"].get<double>(), 0.5);
    EXPECT_EQ(report["halvings"].get<int>(), 0);
    EXPECT_TRUE(report["gain_sweep"]["all_hurwitz"].get<bool>());
}

TEST_F(CliTest, DesignQMissingFieldIsMalformed) {
    const auto cfg = write("q.json", {{"nu", 2}, {"a_tail", {1.0}}, {"gains", {{"g_upper", 1}, {"g_star", 1}}}});
    EXPECT_EQ(run({"design-q", "--config", cfg}), 1);
    EXPECT_NE(err_.str().find("g_lower"), std::string::npos);
}

TEST_F(CliTest, DesignQUnknownFieldIsMalformed) {
    const auto cfg = write("q.json", {{"nu", 1}, {"gains", {{"g_lower", 1}, {"g_upper", 1}, {"g_star", 1}}}, {"a0_intial", 1}});
    EXPECT_EQ(run({"design-q", "--config", cfg}), 1);
    EXPECT_NE(err_.str().find("a0_intial"), std::string::npos);
}

TEST_F(CliTest, DesignQB1GainsRegression) {
    const auto b = dob::bench::b1();
    const auto cfg = write("q.json", {{"nu", 1}, {"gains", dob::io::to_json(b.family.gain)}, {"a0_initial", 1.0}});
    ASSERT_EQ(run({"design-q", "--config", cfg}), 0);
    EXPECT_EQ(Json::parse(out_.str())["a0"].get<double>(), 1.0);
}

TEST_F(CliTest, DesignQNoA0) {
    const auto cfg = write("q.json", {{"nu", 3}, {"a_tail", {-1.0, 1.0}}, {"gains", {{"g_lower", 0.5}, {"g_upper", 2}, {"g_star", 1}}}});
    EXPECT_EQ(run({"design-q", "--config", cfg}), 2);
    EXPECT_FALSE(Json::parse(out_.str())["found"].get<bool>());
}

TEST_F(CliTest, AnalyzeB1Passes) {
    const auto cfg = write("a.json", analyze_config(dob::bench::b1()));
    ASSERT_EQ(run({"analyze", "--config", cfg, "--seed", "7", "--out", path("report.json")}), 0) << err_.str();
    const auto report = Json::parse(read(path("report.json")));
    EXPECT_TRUE(report["conditions_hold"].get<bool>());
    EXPECT_TRUE(report["sweep_clean"].get<bool>());
    EXPECT_EQ(report["tau_star_estimate"].get<double>(), 0.1);

    const auto loci = read(path("report.loci.csv"));
    EXPECT_EQ(loci.substr(0, loci.find('\n')), "sample_id,tau,re,im,class,match_target,match_error");
    EXPECT_GT(std::count(loci.begin(), loci.end(), '\n'), 100);
}

TEST_F(CliTest, AnalyzeFlagsOverrideSections) {
    const auto b = dob::bench::b1();
    const auto fam = write("family.json", dob::io::to_json(b.family));
    const auto c = write("c.json", dob::io::to_json(b.controller));
    const auto q = write("q.json", dob::io::to_json(b.qspec));
    EXPECT_EQ(run({"analyze", "--family", fam, "--controller", c, "--qfilter", q, "--tau-grid", "1e-1:1e-4:log10",
                   "--samples", "20", "--seed", "7", "--out", path("r.json")}),
              0)
        << err_.str();
}

TEST_F(CliTest, AnalyzeFalsificationFixturesExit3) {
    const auto check = [&](const dob::bench::LinearBenchmark& b, const char* failed) {
        const auto cfg = write("a.json", analyze_config(b));
        EXPECT_EQ(run({"analyze", "--config", cfg, "--out", path("r.json")}), 3) << failed << ": " << err_.str();
        const auto report = Json::parse(read(path("r.json")));
        EXPECT_FALSE(report[failed]["pass"].get<bool>()) << failed;
    };
    check(dob::bench::unstable_nominal(), "condition_a");
    check(dob::bench::non_minimum_phase(), "condition_b");
    check(dob::bench::disk_violation(), "condition_c");
}

TEST_F(CliTest, AnalyzeEmptyTauGrid) {
    auto j = analyze_config(dob::bench::b1());
    j["tau_grid"] = Json::array();
    EXPECT_EQ(run({"analyze", "--config", write("a.json", j)}), 1);
    EXPECT_NE(err_.str().find("tau_grid"), std::string::npos);
}

TEST_F(CliTest, PolesWritesLoci) {
    const auto b = dob::bench::b1();
    const Json j{{"plant", dob::io::to_json(dob::bench::b1_perturbed())},
                 {"nominal", dob::io::to_json(b.nominal)},
                 {"controller", dob::io::to_json(b.controller)},
                 {"qfilter", dob::io::to_json(b.qspec)},
                 {"tau_grid", "1e-1:1e-4:log10"},
                 {"log_level", "quiet"}};
    ASSERT_EQ(run({"poles", "--config", write("p.json", j)}), 0) << err_.str();
    const auto csv = out_.str();
    const auto re = column(csv, "re");
    EXPECT_EQ(re.size(), 4u * 6u);  // 2n + m + nu eigenvalues per tau
}

TEST_F(CliTest, SimulateZeroInputGivesZeroOutput) {
    const auto loop = write("loop.json", loop_config(0.01));
    ASSERT_EQ(run({"simulate", "--loop", loop, "--t-end", "1", "--dt", "1e-4", "--out", path("t.csv")}), 0) << err_.str();
    const auto csv = read(path("t.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,y,u,r,d,n,x1,x2,x3,x4,x5,x6");
    const auto y = column(csv, "y");
    EXPECT_EQ(y.size(), 10001u);
    for (double v : y) ASSERT_EQ(v, 0.0);
}

TEST_F(CliTest, SimulateStepGuard) {
    const auto loop = write("loop.json", loop_config(0.01));
    EXPECT_EQ(run({"simulate", "--loop", loop, "--t-end", "1", "--dt", "1e-3"}), 1);
    EXPECT_NE(err_.str().find("step too large"), std::string::npos);
}

TEST_F(CliTest, SimulateBadSignalNamesField) {
    const auto loop = write("loop.json", loop_config(0.01));
    const auto r = write("r.json", {{"kind", "step"}, {"amplitud", 1.0}});
    EXPECT_EQ(run({"simulate", "--loop", loop, "--r", r, "--t-end", "1", "--dt", "1e-4"}), 1);
    EXPECT_NE(err_.str().find("config.r.amplitude"), std::string::npos) << err_.str();
}

TEST_F(CliTest, SimulateEmitConfigRoundTrip) {
    const auto loop = write("loop.json", loop_config(0.01));
    const auto r = write("r.json", {{"kind", "step"}, {"amplitude", 1.0}});
    const std::vector<std::string> base{"simulate", "--loop", loop, "--r", r, "--t-end", "0.5", "--dt", "1e-4"};
    auto args = base;
    args.push_back("--emit-config");
    ASSERT_EQ(run(args), 0);
    const auto emitted = write("emitted.json", Json::parse(out_.str()));
    args = base;
    args.insert(args.end(), {"--out", path("a.csv")});
    ASSERT_EQ(run(args), 0);
    ASSERT_EQ(run({"simulate", "--config", emitted, "--out", path("b.csv")}), 0);
    EXPECT_EQ(read(path("a.csv")), read(path("b.csv")));
}

TEST_F(CliTest, SimulateNlAutoSaturationRoundTrip) {
    Json cfg{{"benchmark", "n1"}, {"tau", 0.02}, {"t_end", 0.5}, {"log_level", "quiet"}};
    // replace the frozen S_phi with a seeded estimate
    ASSERT_EQ(run({"simulate-nl", "--config", write("n1.json", cfg), "--emit-config"}), 0);
    Json resolved = Json::parse(out_.str());
    resolved["dob"]["sat_phi"] = "auto";
    resolved["s_phi_samples"] = 2000;
    const auto first = write("first.json", resolved);
    ASSERT_EQ(run({"simulate-nl", "--config", first, "--seed", "3", "--out", path("a.csv")}), 0) << err_.str();
    ASSERT_EQ(run({"simulate-nl", "--config", first, "--seed", "3", "--emit-config"}), 0);
    const auto second = write("second.json", Json::parse(out_.str()));
    ASSERT_EQ(run({"simulate-nl", "--config", second, "--out", path("b.csv")}), 0) << err_.str();
    EXPECT_EQ(read(path("a.csv")), read(path("b.csv")));
    ASSERT_EQ(run({"simulate-nl", "--config", first, "--seed", "4", "--out", path("c.csv")}), 0);
    EXPECT_NE(read(path("a.csv")), read(path("c.csv")));
}

TEST_F(CliTest, SimulateNlDivergenceExit4) {
    Json cfg{{"benchmark", "n1"}, {"tau", 0.01}, {"t_end", 2.0}, {"log_level", "quiet"}};
    ASSERT_EQ(run({"simulate-nl", "--config", write("n1.json", cfg), "--emit-config"}), 0);
    Json resolved = Json::parse(out_.str());
    resolved["dob"]["sat_phi"] = {-1e8, 1e8};
    resolved["dob"]["sat_x"] = {{-1e8, 1e8}, {-1e8, 1e8}};
    EXPECT_EQ(run({"simulate-nl", "--config", write("wide.json", resolved), "--out", path("t.csv")}), 4);
    EXPECT_NE(err_.str().find("divergence"), std::string::npos);
    EXPECT_FALSE(read(path("t.csv")).empty());
}

TEST_F(CliTest, SimulateNlUnknownBenchmark) {
    EXPECT_EQ(run({"simulate-nl", "--config", write("x.json", {{"benchmark", "n9"}})}), 1);
    EXPECT_NE(err_.str().find("benchmark"), std::string::npos);
}

TEST_F(CliTest, CompareTransientSweepDecreases) {
    const auto cfg = write("ct.json", {{"benchmark", "n1"}, {"t_end", 10.0}, {"log_level", "quiet"}});
    ASSERT_EQ(run({"compare-transient", "--config", cfg, "--tau-sweep", "1e-2,3e-3,1e-3,3e-4", "--out", path("s.csv")}), 0)
        << err_.str();
    const auto csv = read(path("s.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "tau,sup_dev,sup_u_err,max_abs_u,z_max");
    const auto dev = column(csv, "sup_dev");
    ASSERT_EQ(dev.size(), 4u);
    for (std::size_t k = 1; k < dev.size(); ++k) EXPECT_LT(dev[k], dev[k - 1]);
}

TEST_F(CliTest, CompareTransientEmitRoundTrip) {
    const auto cfg = write("ct.json", {{"benchmark", "linear"}, {"t_end", 2.0}, {"log_level", "quiet"}});
    ASSERT_EQ(run({"compare-transient", "--config", cfg, "--tau-sweep", "1e-1,3e-2", "--emit-config"}), 0);
    const auto emitted = write("e.json", Json::parse(out_.str()));
    ASSERT_EQ(run({"compare-transient", "--config", cfg, "--tau-sweep", "1e-1,3e-2", "--out", path("a.csv")}), 0);
    ASSERT_EQ(run({"compare-transient", "--config", emitted, "--out", path("b.csv")}), 0);
    EXPECT_EQ(read(path("a.csv")), read(path("b.csv")));
}
