#include "ntn/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace ntn {

double spectral_efficiency(std::span<const double> rates, const ResourceGrid& grid, double slot_duration)
{
    if (!(grid.system_bandwidth() > 0.0)) {
        throw std::invalid_argument("spectral_efficiency: zero bandwidth");
    }
    double bits = 0.0;
    for (const double r : rates) {
        bits += r;
    }
    return bits / slot_duration / grid.system_bandwidth();
}

bool outage_event(double urllc_rate, double packet_bits, double lambda_t)
{
    return urllc_rate <= packet_bits * lambda_t;
}

OutageCdf outage_cdf(std::span<const double> window_rates, double epsilon_max)
{
    if (window_rates.empty()) {
        throw std::invalid_argument("outage_cdf: no windows");
    }
    std::vector<double> sorted(window_rates.begin(), window_rates.end());
    for (const double p : sorted) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("outage_cdf: window rate outside [0, 1]");
        }
    }
    std::sort(sorted.begin(), sorted.end());

    OutageCdf cdf;
    const auto n = static_cast<double>(sorted.size());
    std::size_t above = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] > epsilon_max) {
            ++above;
        }
        if (i + 1 == sorted.size() || sorted[i + 1] != sorted[i]) {
            cdf.points.push_back({sorted[i], static_cast<double>(i + 1) / n});
        }
    }
    cdf.points.back().cumulative = 1.0;
    cdf.exceedance = static_cast<double>(above) / n;
    return cdf;
}

std::vector<double> window_outage_rates(std::span<const SlotMetrics> slots, std::size_t window)
{
    if (window == 0) {
        throw std::invalid_argument("window must be >= 1");
    }
    std::vector<double> rates;
    const std::size_t full = slots.size() / window;
    for (std::size_t w = 0; w < full; ++w) {
        std::size_t hits = 0;
        for (std::size_t i = w * window; i < (w + 1) * window; ++i) {
            hits += slots[i].outage ? 1 : 0;
        }
        rates.push_back(static_cast<double>(hits) / static_cast<double>(window));
    }
    if (full == 0 && !slots.empty()) {
        std::size_t hits = 0;
        for (const auto& s : slots) {
            hits += s.outage ? 1 : 0;
        }
        rates.push_back(static_cast<double>(hits) / static_cast<double>(slots.size()));
    }
    return rates;
}

SlotMetrics slot_metrics(const SlotOutcome& outcome, const NetworkLayout& layout, const QoSRequirement& qos)
{
    SlotMetrics m;
    m.t = outcome.t;
    m.lambda_t = outcome.lambda_t;
    m.sum_rate_embb = outcome.embb_rate;
    m.sum_rate_urllc = outcome.urllc_rate;
    m.served_urllc = outcome.urllc_served;
    m.spectral_efficiency = spectral_efficiency(outcome.served, layout.grid, layout.slot_duration);
    m.outage = outage_event(outcome.urllc_rate, qos.urllc_packet_size, outcome.lambda_t);
    return m;
}

RunSummary summarize_run(std::span<const SlotMetrics> slots, std::string policy_id, std::uint64_t seed,
                         std::uint64_t scenario_hash, std::size_t window, double epsilon_max)
{
    if (slots.empty()) {
        throw std::invalid_argument("summarize_run: no slots");
    }
    RunSummary s;
    s.policy_id = std::move(policy_id);
    s.seed = seed;
    s.scenario_hash = scenario_hash;
    s.slots = slots.size();
    s.window = window;
    double se = 0.0;
    double lambda = 0.0;
    std::size_t outages = 0;
    for (const auto& m : slots) {
        se += m.spectral_efficiency;
        lambda += m.lambda_t;
        outages += m.outage ? 1 : 0;
    }
    const auto n = static_cast<double>(slots.size());
    s.mean_spectral_efficiency = se / n;
    s.lambda = lambda / n;
    s.outage_probability = static_cast<double>(outages) / n;
    s.window_outage = window_outage_rates(slots, window);
    s.cdf = outage_cdf(s.window_outage, epsilon_max);
    return s;
}

std::filesystem::path summary_path_for(const std::filesystem::path& csv_path)
{
    auto p = csv_path;
    p.replace_extension(".summary");
    return p;
}

void export_csv(std::span<const SlotMetrics> slots, const RunSummary& summary,
                const std::filesystem::path& path)
{
    {
        std::ofstream os(path, std::ios::trunc);
        if (!os) {
            throw std::runtime_error("cannot write " + path.string());
        }
        fmt::print(os, "{}\n", kSlotCsvHeader);
        for (const auto& m : slots) {
            fmt::print(os, "{},{},{},{:.3f},{:.3f},{:.3f},{:.6f},{}\n", m.t, summary.policy_id,
                       summary.seed, m.lambda_t, m.sum_rate_embb, m.sum_rate_urllc,
                       m.spectral_efficiency, m.outage ? 1 : 0);
        }
        if (!os) {
            throw std::runtime_error("failed writing " + path.string());
        }
    }

    const auto spath = summary_path_for(path);
    std::ofstream os(spath, std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write " + spath.string());
    }
    fmt::print(os, "policy_id={}\n", summary.policy_id);
    fmt::print(os, "seed={}\n", summary.seed);
    fmt::print(os, "scenario_hash={:016x}\n", summary.scenario_hash);
    fmt::print(os, "lambda={:.3f}\n", summary.lambda);
    fmt::print(os, "slots={}\n", summary.slots);
    fmt::print(os, "mean_spectral_efficiency={:.6f}\n", summary.mean_spectral_efficiency);
    fmt::print(os, "outage_probability={:.6f}\n", summary.outage_probability);
    fmt::print(os, "window={}\n", summary.window);
    fmt::print(os, "windows={}\n", summary.window_outage.size());
    fmt::print(os, "exceedance_mass={:.6f}\n", summary.cdf.exceedance);
    std::string cdf;
    for (const auto& p : summary.cdf.points) {
        cdf += fmt::format("{}{:.6f}:{:.6f}", cdf.empty() ? "" : ";", p.value, p.cumulative);
    }
    fmt::print(os, "cdf={}\n", cdf);
    if (!os) {
        throw std::runtime_error("failed writing " + spath.string());
    }
}

} // namespace ntn
