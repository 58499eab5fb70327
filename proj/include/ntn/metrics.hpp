#pragma once

// Spectral efficiency, URLLC outage statistics and CSV export.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ntn/domain.hpp"
#include "ntn/envsim.hpp"

namespace ntn {

struct SlotMetrics
{
    Slot t = 0;
    double lambda_t = 0.0;
    double sum_rate_embb = 0.0;   // bits/slot
    double sum_rate_urllc = 0.0;  // R_u(t), allocated URLLC rate, bits/slot
    double served_urllc = 0.0;    // URLLC bits actually drained from queues
    double spectral_efficiency = 0.0;
    bool outage = false;
};

struct CdfPoint
{
    double value = 0.0;
    double cumulative = 0.0;
};

struct OutageCdf
{
    std::vector<CdfPoint> points; // one per distinct value, ascending
    double exceedance = 0.0;      // fraction of windows with outage rate > epsilon_max
};

struct RunSummary
{
    std::string policy_id;
    std::uint64_t seed = 0;
    std::uint64_t scenario_hash = 0;
    double lambda = 0.0;               // nominal lambda of the run (mean of lambda_t)
    std::size_t slots = 0;
    double mean_spectral_efficiency = 0.0;
    double outage_probability = 0.0;   // fraction of slots in outage
    std::size_t window = 100;
    std::vector<double> window_outage; // per-window outage rates
    OutageCdf cdf;
};

/// (sum of rates / slot_duration) / system bandwidth, in bits/s/Hz.
double spectral_efficiency(std::span<const double> rates, const ResourceGrid& grid, double slot_duration);

/// R_u <= zeta * lambda_t; the boundary counts as an outage.
bool outage_event(double urllc_rate, double packet_bits, double lambda_t);

/// Empirical CDF of per-window outage rates plus mass above epsilon_max.
OutageCdf outage_cdf(std::span<const double> window_rates, double epsilon_max);

/// Outage rate of each complete window of `window` slots; a trailing partial
/// window is dropped unless it is the only one.
std::vector<double> window_outage_rates(std::span<const SlotMetrics> slots, std::size_t window);

SlotMetrics slot_metrics(const SlotOutcome& outcome, const NetworkLayout& layout, const QoSRequirement& qos);

RunSummary summarize_run(std::span<const SlotMetrics> slots, std::string policy_id, std::uint64_t seed,
                         std::uint64_t scenario_hash, std::size_t window, double epsilon_max);

/// Writes `path` (header + one row per slot) and `summary_path_for(path)`
/// (key=value lines). Fixed decimal formatting; identical runs give identical bytes.
void export_csv(std::span<const SlotMetrics> slots, const RunSummary& summary,
                const std::filesystem::path& path);

std::filesystem::path summary_path_for(const std::filesystem::path& csv_path);

inline constexpr const char* kSlotCsvHeader =
    "t,policy_id,seed,lambda_t,sum_rate_embb,sum_rate_urllc,spectral_efficiency,outage";

} // namespace ntn
