#include "pueguard/experiment.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>

using namespace pueguard;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("pueguard_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    os << text;
}

const char* kSmallFig6 =
    "network.channels = 6\n"
    "pu.arrival_rate = 0.05\npu.departure_rate = 0.1\n"
    "su.arrival_rate = 2\nsu.departure_rate = 1\n"
    "attacker.1.motive = malicious\nattacker.1.dwell_rate = 1\n"
    "detection.mode = abstract\n"
    "sweep.lambda_eu = 0.4, 0.8\nsweep.p_d = 0.9\nsweep.guard_channels = 0, 1\n"
    "report.guard_channels = 1\n"
    "run.horizon = 2000\nrun.replications = 3\nrun.seed = 5\n";

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(PUEGUARD_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Presets, EmbeddedCopiesMatchSourceFiles) {
    for (const auto& [name, text] : presets::kShipped) {
        EXPECT_EQ(slurp(fs::path(PUEGUARD_PRESET_DIR) / (std::string(name) + ".cfg")), std::string(text)) << name;
    }
    EXPECT_THROW(shipped_preset("fig4"), ConfigError);
}

TEST(MeanCi95, StudentTHalfWidth) {
    const auto ci = mean_ci95({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(ci.mean, 2.5);
    // t_{0.975, 3} = 3.182446305284263, sample sd = sqrt(5/3)
    EXPECT_NEAR(ci.half_width, 3.182446305284263 * std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
    EXPECT_TRUE(std::isinf(mean_ci95({1.0}).half_width));
}

TEST(ParallelFor, CoversEveryIndexAndPropagatesErrors) {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 4, [&](std::size_t k) { hits[k] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t k) {
                     if (k == 7) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}

TEST(Fig5, ShippedPresetGrid) {
    const auto rows = run_fig5(shipped_preset("fig5"));
    ASSERT_EQ(rows.size(), 10u * 3u * 2u);
    for (const auto& r : rows) {
        EXPECT_GE(r.detection_probability, 0.0);
        EXPECT_LE(r.detection_probability, 1.0);
    }
    const auto csv = fig5_csv(rows);
    EXPECT_EQ(csv.rfind("pf_target,attacker_location_id,n_samples,detection_probability\n", 0), 0u);
}

TEST(Fig5, InfeasibleEqualSplitIsAConfigError) {
    auto cfg = shipped_preset("fig5");
    cfg.set("detection.tail_split", "equal");
    EXPECT_THROW(run_fig5(cfg), ConfigError);
}

TEST(Fig3, AnalyticOnlyRunSkipsSimulation) {
    auto cfg = shipped_preset("fig3");
    cfg.set("simulate.enabled", "false");
    const auto rows = run_fig3(cfg, 1);
    ASSERT_EQ(rows.size(), 11u);
    EXPECT_FALSE(rows[0].simulated);
    EXPECT_NEAR(rows[4].analytic.lambda_eu, 0.4, 1e-12);
}

TEST(Fig6, CommonSeedsAcrossGuardCounts) {
    const auto cells = run_fig6(KeyValueConfig::parse(std::string(kSmallFig6)), 5, 3);
    ASSERT_EQ(cells.size(), 4u);
    EXPECT_EQ(cells[0].seeds, cells[1].seeds);
    EXPECT_NE(cells[0].seeds, cells[2].seeds);
    EXPECT_EQ(cells[1].guard_channels, 1);
    // same traffic: identical arrival counts for both guard settings
    for (std::size_t r = 0; r < 3; ++r) {
        EXPECT_EQ(cells[0].replications[r].new_call_arrivals, cells[1].replications[r].new_call_arrivals);
    }
}

TEST(RunExperiment, WritesCsvManifestAndPlots) {
    const auto dir = scratch("fig6");
    write_file(dir / "in.cfg", kSmallFig6);
    ExperimentOptions opt;
    opt.out_dir = (dir / "out").string();
    opt.config_path = (dir / "in.cfg").string();
    opt.emit_plots = true;
    const auto report = run_experiment(Experiment::Fig6, opt);
    EXPECT_EQ(report.replications, 3);
    EXPECT_EQ(report.seed, 5u);
    for (const char* f : {"fig6_runs.csv", "fig6_summary.csv", "manifest.cfg", "fig6.gp"}) {
        EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
    }
    const auto runs = slurp(dir / "out" / "fig6_runs.csv");
    EXPECT_NE(runs.find(",aggregate,,"), std::string::npos);
    EXPECT_NE(slurp(dir / "out" / "fig6.gp").find("fig6_summary.csv"), std::string::npos);
}

TEST(RunExperiment, ManifestReproducesTheRun) {
    const auto dir = scratch("manifest");
    write_file(dir / "in.cfg", kSmallFig6);
    ExperimentOptions a;
    a.out_dir = (dir / "a").string();
    a.config_path = (dir / "in.cfg").string();
    a.seed = 123;
    run_experiment(Experiment::Fig6, a);

    ExperimentOptions b;
    b.out_dir = (dir / "b").string();
    b.config_path = (dir / "a" / "manifest.cfg").string();
    run_experiment(Experiment::Fig6, b);
    EXPECT_EQ(slurp(dir / "a" / "fig6_runs.csv"), slurp(dir / "b" / "fig6_runs.csv"));
    EXPECT_EQ(slurp(dir / "a" / "manifest.cfg"), slurp(dir / "b" / "manifest.cfg"));

    ExperimentOptions wrong = b;
    wrong.out_dir = (dir / "c").string();
    EXPECT_THROW(run_experiment(Experiment::Custom, wrong), ConfigError);
}

TEST(RunExperiment, ByteIdenticalAcrossRunsAndThreadCounts) {
    const auto dir = scratch("determinism");
    write_file(dir / "in.cfg", kSmallFig6);
    std::string first;
    for (unsigned threads : {1u, 3u}) {
        ExperimentOptions opt;
        opt.out_dir = (dir / ("t" + std::to_string(threads))).string();
        opt.config_path = (dir / "in.cfg").string();
        opt.threads = threads;
        run_experiment(Experiment::Fig6, opt);
        const auto text = slurp(fs::path(opt.out_dir) / "fig6_runs.csv");
        if (first.empty()) {
            first = text;
        } else {
            EXPECT_EQ(text, first);
        }
    }
}

TEST(RunExperiment, ConfigErrorLeavesNoOutputs) {
    const auto dir = scratch("bad");
    write_file(dir / "in.cfg", std::string(kSmallFig6) + "network.bogus = 1\n");
    ExperimentOptions opt;
    opt.out_dir = (dir / "out").string();
    opt.config_path = (dir / "in.cfg").string();
    try {
        run_experiment(Experiment::Fig6, opt);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "network.bogus");
        const std::string_view small(kSmallFig6);
        EXPECT_EQ(e.line(), int(std::count(small.begin(), small.end(), '\n')) + 1);
    }
    EXPECT_FALSE(fs::exists(dir / "out" / "fig6_runs.csv"));
}

TEST(OutputSet, UncommittedFilesAreRemoved) {
    const auto dir = scratch("outputset");
    {
        OutputSet out(dir);
        out.write("a.csv", "x\n");
        EXPECT_TRUE(fs::exists(dir / "a.csv"));
    }
    EXPECT_FALSE(fs::exists(dir / "a.csv"));
    {
        OutputSet out(dir);
        out.write("b.csv", "y\n");
        out.commit();
    }
    EXPECT_TRUE(fs::exists(dir / "b.csv"));
}

TEST(PlotScript, MissingCsvIsNamed) {
    const auto dir = scratch("plots");
    try {
        plot_script(Experiment::Fig5, dir);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("fig5_detection.csv"), std::string::npos);
    }
    write_file(dir / "fig3_outage.csv", "lambda_eu,mu_eu,outage_prob,recovery_time\n");
    const auto script = plot_script(Experiment::Fig3, dir, {"svg", "svg"});
    EXPECT_NE(script.find("set terminal svg"), std::string::npos);
    EXPECT_NE(script.find("multiplot"), std::string::npos);
}

TEST(Cli, RunsPresetAndReportsErrors) {
    const auto dir = scratch("cli");
    EXPECT_EQ(run_cli("fig5 --out " + (dir / "out").string() + " --emit-plots", dir / "ok.log"), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "fig5_detection.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "fig5.gp"));

    write_file(dir / "bad.cfg", "network.channels = zero\n");
    EXPECT_EQ(run_cli("custom --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o2").string(),
                      dir / "bad.log"),
              2);
    const auto log = slurp(dir / "bad.log");
    EXPECT_NE(log.find("network.channels"), std::string::npos);
    EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 1);

    EXPECT_NE(run_cli("fig9", dir / "unknown.log"), 0);
    EXPECT_NE(run_cli("custom", dir / "noconfig.log"), 0);
}

TEST(Cli, CustomScenarioWithReplications) {
    const auto dir = scratch("cli_custom");
    write_file(dir / "s.cfg",
               "network.channels = 5\nsu.arrival_rate = 1\nattacker.1.arrival_rate = 0.3\nrun.horizon = 500\n");
    ASSERT_EQ(run_cli("custom --config " + (dir / "s.cfg").string() + " --out " + (dir / "out").string() +
                          " --replications 4 --seed 9",
                      dir / "log"),
              0);
    const auto csv = slurp(dir / "out" / "custom_runs.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 + 1);
    EXPECT_NE(slurp(dir / "out" / "manifest.cfg").find("manifest.seed = 9"), std::string::npos);
}
