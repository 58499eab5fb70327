#pragma once

// Scenario files: YAML mappings with one section per concern. Every key is
// optional; unknown and duplicate keys are rejected. See docs/scenario-format.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntn/envsim.hpp"
#include "ntn/nn.hpp"
#include "ntn/policy.hpp"
#include "ntn/twin.hpp"

namespace ntn {

/// Parse or semantic error in a scenario file. line/column are 1-based, 0 when unknown.
class ConfigError : public std::runtime_error
{
public:
    ConfigError(const std::string& what, int line = 0, int column = 0);

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

struct TrafficConfig
{
    LambdaSchedule::Mode mode = LambdaSchedule::Mode::CONSTANT;
    double lambda = 100.0;
    double lambda_min = 100.0;
    double lambda_max = 200.0;
    std::vector<double> lambda_values;
    Slot lambda_hold = 500;
};

struct LinkConfig
{
    double embb_mean_snr_db = 7.0;
    double embb_snr_spread_db = 2.0;
    double urllc_mean_snr_db = 2.0;
    double urllc_snr_spread_db = 0.0;
    FadingParams fading{FadingModel::RICIAN, 30.0};
};

struct TwinConfig
{
    DelayLevel delay = DelayLevel::MINIMAL;
    DelayProfile profile;
    Slot cadence = 1;
    Slot summary_window = 1;
};

struct NnConfig
{
    std::vector<std::size_t> hidden = kDefaultHidden;
    double reference_snr_db = 10.0;
    double reference_lambda = 200.0;
};

struct TrainSection
{
    TrainConfig train{0.02, 10, 32, 1};
    std::size_t samples = 20000;
    /// Training traffic: lambda drawn uniformly per slot from this range.
    double lambda_min = 100.0;
    double lambda_max = 200.0;
};

struct Scenario
{
    std::uint64_t seed = 1;
    Slot horizon = 5000;
    double slot_duration = 1e-3;
    std::size_t embb_users = 10;
    std::size_t urllc_users = 10;
    std::size_t num_rbs = 50;
    double rb_bandwidth = 1e6;
    LinkConfig link;
    TrafficConfig traffic;
    QoSRequirement qos;
    TwinConfig twin;
    OrthogonalConfig orthogonal;
    OracleConfig oracle;
    std::size_t outage_window = 100;
    NnConfig nn;
    TrainSection training;
    // experiment defaults
    std::vector<PolicyKind> policies{PolicyKind::ORTHOGONAL, PolicyKind::DNN_REPAIR};
    std::vector<double> lambda_sweep{100, 125, 150, 175, 200};

    /// Throws ConfigError naming the violated invariant.
    void validate() const;

    NetworkLayout layout() const;
    LambdaSchedule lambda_schedule() const;
    LambdaSchedule training_schedule() const;
    EnvConfig env(const LambdaSchedule& lambda) const;
    FeatureEncoder encoder() const;
    DelayClass delay() const;
    /// Deep enough for the configured delay, cadence and summary window.
    std::size_t history_depth() const;
    std::vector<std::size_t> mlp_sizes() const;

    /// Stable textual form; two scenarios are equivalent iff their canonical forms match.
    std::string canonical() const;
    std::uint64_t hash() const;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

} // namespace ntn
