#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ntn/experiment.hpp"
#include "test_support.hpp"

using namespace ntn;
using namespace ntn::testing;

namespace {

// Default network, shrunk training so the dnn paths run in seconds.
Scenario quick_scenario(Slot horizon = 200)
{
    Scenario s;
    s.horizon = horizon;
    s.nn.hidden = {32};
    s.training.samples = 300;
    s.training.train = {0.02, 2, 32, 4};
    s.validate();
    return s;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) {
            cells.push_back(c);
        }
        rows.push_back(cells);
    }
    return rows;
}

std::size_t count_files(const std::filesystem::path& dir, const std::string& suffix)
{
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
            ++n;
        }
    }
    return n;
}

int run_cli(const std::string& args, const std::string& env = "")
{
    const std::string cmd = env + " " NTN_CLI_PATH " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Experiment, SingleRunShape)
{
    auto dir = scratch_dir("exp_single");
    ExperimentSpec spec{quick_scenario(100), {PolicyKind::ORTHOGONAL}, {100.0}, dir, std::nullopt, false};
    auto r = run_experiment(spec);
    ASSERT_EQ(r.runs.size(), 1u);
    EXPECT_EQ(count_files(dir, "lambda100.csv"), 1u);
    auto rows = read_csv(dir / "run_orthogonal_lambda100.csv");
    EXPECT_EQ(rows.size(), 101u);
    auto table = read_csv(r.comparison);
    ASSERT_EQ(table.size(), 2u);
    EXPECT_EQ(table[1][0], "orthogonal");
}

TEST(Experiment, SweepIsCartesianAndRepeatable)
{
    auto a = scratch_dir("exp_sweep_a");
    auto b = scratch_dir("exp_sweep_b");
    const auto sc = quick_scenario();
    for (const auto& dir : {a, b}) {
        ExperimentSpec spec{sc, {PolicyKind::ORTHOGONAL, PolicyKind::DNN_REPAIR}, {100, 150, 200}, dir};
        auto r = run_experiment(spec);
        EXPECT_EQ(r.runs.size(), 6u);
        EXPECT_EQ(count_files(dir, "_twin.csv"), 6u);
        EXPECT_EQ(count_files(dir, ".csv"), 6u + 6u + 2u); // runs, twin logs, comparison, loss curve
    }
    for (const auto& e : std::filesystem::directory_iterator(a)) {
        EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
    }
}

TEST(Experiment, CommonSeedPerLambda)
{
    auto dir = scratch_dir("exp_crn");
    ExperimentSpec spec{quick_scenario(50), {PolicyKind::ORTHOGONAL, PolicyKind::ORACLE}, {120}, dir};
    auto r = run_experiment(spec);
    EXPECT_EQ(r.runs[0].seed, r.runs[1].seed);
}

TEST(Experiment, MissingWeights)
{
    auto dir = scratch_dir("exp_missing");
    ExperimentSpec spec{quick_scenario(10), {PolicyKind::DNN}, {100}, dir, std::nullopt, false};
    EXPECT_THROW(run_experiment(spec), MissingWeights);
    EXPECT_THROW(simulate(quick_scenario(10), PolicyKind::DNN, nullptr, LambdaSchedule::constant(1), 1),
                 MissingWeights);
    ExperimentSpec none{quick_scenario(10), {}, {100}, dir};
    EXPECT_THROW(run_experiment(none), ConfigError);
}

TEST(Experiment, WeightsMustMatchScenario)
{
    auto dir = scratch_dir("exp_mismatch");
    save_weights(Mlp::glorot({5, 4, 6}, 3, 1), dir / "w.bin");
    ExperimentSpec spec{quick_scenario(10), {PolicyKind::DNN}, {100}, dir, dir / "w.bin"};
    EXPECT_THROW(run_experiment(spec), ConfigError);
}

TEST(Train, OneEpochOutputs)
{
    auto a = scratch_dir("train_a");
    auto b = scratch_dir("train_b");
    auto sc = quick_scenario();
    sc.training.train.epochs = 1;
    auto out = train_command(sc, a);
    train_command(sc, b);
    ASSERT_TRUE(std::filesystem::exists(out.weights));
    auto rows = read_csv(out.loss_curve);
    ASSERT_EQ(rows.size(), 3u); // header, step 0, step 1
    EXPECT_EQ(rows[0], (std::vector<std::string>{"step", "loss"}));
    const double uniform = 50.0 * std::log(20.0);
    EXPECT_NEAR(std::stod(rows[1][1]), uniform, 0.05 * uniform);
    EXPECT_EQ(slurp(a / "weights.bin"), slurp(b / "weights.bin"));
    EXPECT_EQ(slurp(a / "loss.csv"), slurp(b / "loss.csv"));
}

TEST(Loop, MinimalDelayTwinIsExact)
{
    auto r = simulate(quick_scenario(300), PolicyKind::ORACLE, nullptr, LambdaSchedule::constant(150), 3);
    for (const auto& row : r.twin_log) {
        ASSERT_EQ(row.mean_abs_snr_error, 0.0);
        ASSERT_EQ(row.mean_abs_queue_error, 0.0);
        ASSERT_EQ(row.staleness, 0u);
        ASSERT_EQ(row.delivered_at, row.t);
    }
}

TEST(Loop, DecisionsNeverSeeTheFuture)
{
    for (auto level : {DelayLevel::MODERATE, DelayLevel::SIGNIFICANT}) {
        auto sc = quick_scenario(300);
        sc.twin.delay = level;
        const Slot d = sc.delay().slots;
        auto r = simulate(sc, PolicyKind::ORTHOGONAL, nullptr, LambdaSchedule::constant(150), 4);
        double divergence = 0.0;
        for (const auto& row : r.twin_log) {
            ASSERT_LE(row.captured_at, row.t);
            ASSERT_EQ(row.delivered_at, row.t);
            ASSERT_LE(row.staleness, d);
            if (row.t >= d) {
                ASSERT_EQ(row.staleness, d);
                ASSERT_FALSE(row.underflow);
            }
            divergence += row.mean_abs_snr_error;
        }
        EXPECT_GT(divergence, 0.0);
    }
}

TEST(Loop, CadenceAndSummaryWindow)
{
    auto sc = quick_scenario(40);
    sc.twin.cadence = 5;
    sc.twin.summary_window = 3;
    sc.validate();
    auto r = simulate(sc, PolicyKind::ORTHOGONAL, nullptr, LambdaSchedule::constant(150), 5);
    for (const auto& row : r.twin_log) {
        EXPECT_EQ(row.captured_at, row.t - row.t % 5);
        EXPECT_EQ(row.staleness, row.t % 5);
    }
}

TEST(Loop, LoggedOutageMatchesLoggedRates)
{
    auto dir = scratch_dir("exp_outage");
    auto sc = quick_scenario(400);
    sc.traffic.mode = LambdaSchedule::Mode::UNIFORM;
    ExperimentSpec spec{sc, {PolicyKind::ORTHOGONAL}, {}, dir};
    run_experiment(spec);
    auto rows = read_csv(dir / "run_orthogonal.csv");
    ASSERT_EQ(rows.size(), 401u);
    std::size_t outages = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double lambda = std::stod(rows[i][3]);
        const double ru = std::stod(rows[i][5]);
        const bool logged = rows[i][7] == "1";
        EXPECT_EQ(outage_event(ru, sc.qos.urllc_packet_size, lambda), logged) << "row " << i;
        outages += logged ? 1 : 0;
    }
    EXPECT_GT(outages, 0u); // orthogonal cannot carry the upper half of the range
}

TEST(Cli, ExitCodesAndOutputDir)
{
    auto dir = scratch_dir("cli");
    {
        std::ofstream(dir / "bad.yaml") << "qos:\n  urllc_outage_threshold: 1.5\n";
        std::ofstream(dir / "ok.yaml") << "horizon_slots: 20\n";
    }
    const auto out = (dir / "out").string();
    EXPECT_EQ(run_cli("run --scenario " + (dir / "bad.yaml").string() + " --out " + out), 2);
    EXPECT_EQ(run_cli("run --policy nonsense --out " + out), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("eval --scenario " + (dir / "ok.yaml").string() + " --out " + out), 3);
    EXPECT_EQ(run_cli("run --scenario " + (dir / "ok.yaml").string() + " --policy orthogonal --out " + out), 0);
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "run_orthogonal.csv"));

    const auto env_out = dir / "from_env";
    EXPECT_EQ(run_cli("sweep --scenario " + (dir / "ok.yaml").string() + " --policy orthogonal --lambda 110",
                      "NTN_TWIN_OUT=" + env_out.string()),
              0);
    EXPECT_TRUE(std::filesystem::exists(env_out / "run_orthogonal_lambda110.csv"));
}
