#pragma once

// Experiment orchestration: the per-slot sync -> decide -> advance -> record
// loop, dataset generation for training, and multi-run sweeps with file output.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ntn/metrics.hpp"
#include "ntn/nn.hpp"
#include "ntn/policy.hpp"
#include "ntn/scenario.hpp"

namespace ntn {

struct TwinLogRow
{
    Slot t = 0;
    Slot captured_at = 0;
    Slot delivered_at = 0;
    Slot staleness = 0;
    bool underflow = false;
    double mean_abs_snr_error = 0.0;
    double mean_abs_queue_error = 0.0;
};

struct RunResult
{
    RunSummary summary;
    std::vector<SlotMetrics> slots;
    std::vector<TwinLogRow> twin_log;
    std::size_t repair_exhausted = 0; // slots where repair ran out of blocks
};

/// Seed for run `index` of an experiment whose base seed is `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// One run of `horizon` slots. `net` is required for the dnn policies.
RunResult simulate(const Scenario& scenario, PolicyKind policy, const Mlp* net,
                   const LambdaSchedule& lambda, std::uint64_t seed);

/// Oracle-labelled twin snapshots; the physical network follows the oracle.
std::vector<Sample> generate_dataset(const Scenario& scenario, const LambdaSchedule& lambda,
                                     std::size_t samples, std::uint64_t seed);

struct TrainOutput
{
    TrainResult result;
    std::filesystem::path weights;
    std::filesystem::path loss_curve;
};

/// Dataset from the scenario's training traffic, train, write weights.bin and loss.csv.
TrainOutput train_command(const Scenario& scenario, const std::filesystem::path& out_dir);

struct ExperimentSpec
{
    Scenario scenario;
    std::vector<PolicyKind> policies;
    /// Constant-lambda runs for each value; empty means the scenario's own traffic.
    std::vector<double> lambda_sweep;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> weights;
    /// Train into out_dir when a dnn policy is requested without weights.
    bool train_if_missing = true;

    void validate() const;
};

struct ExperimentResult
{
    std::vector<RunSummary> runs;
    std::filesystem::path comparison;
};

/// Thrown when a dnn policy has neither weights nor a train stage.
class MissingWeights : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

std::string run_file_stem(PolicyKind policy, std::optional<double> lambda);

void write_twin_log(std::span<const TwinLogRow> rows, const std::filesystem::path& path);

} // namespace ntn
