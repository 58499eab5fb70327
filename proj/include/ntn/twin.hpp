#pragma once

// Twin layer: a delayed, possibly summarized copy of the physical state
// that policies decide on, plus fidelity scoring against the live network.

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "ntn/envsim.hpp"

namespace ntn {

enum class DelayLevel { MINIMAL, MODERATE, SIGNIFICANT };

const char* to_string(DelayLevel d);

/// Slot counts behind the three freshness classes.
struct DelayProfile
{
    Slot moderate = 2;
    Slot significant = 50;

    void validate() const;
};

struct DelayClass
{
    DelayLevel level = DelayLevel::MINIMAL;
    Slot slots = 0;

    static DelayClass from(DelayLevel level, const DelayProfile& profile);
};

class TwinSnapshot
{
public:
    TwinSnapshot(Slot captured_at, Slot delivered_at, ChannelState channel, TrafficState traffic,
                 QoSRequirement qos, bool staleness_underflow = false);

    Slot captured_at() const { return captured_at_; }
    Slot delivered_at() const { return delivered_at_; }
    const ChannelState& channel() const { return channel_; }
    const TrafficState& traffic() const { return traffic_; }
    const QoSRequirement& qos() const { return qos_; }
    /// Set when the history did not reach back far enough for the requested delay.
    bool staleness_underflow() const { return staleness_underflow_; }

private:
    Slot captured_at_;
    Slot delivered_at_;
    ChannelState channel_;
    TrafficState traffic_;
    QoSRequirement qos_;
    bool staleness_underflow_;
};

/// Snapshot of `physical` as-is, captured and delivered at its own clock.
TwinSnapshot snapshot_of(const PhysicalState& physical);

Slot staleness(const TwinSnapshot& s, Slot now);

/// Per-entry mean over the last `window` snapshots of `history`.
TwinSnapshot summarize(std::span<const TwinSnapshot> history, Slot window);

struct CalibrationTolerances
{
    double snr = 1e-9;
    double queue = 1e-9;
};

struct CalibrationReport
{
    double mean_abs_snr_error = 0.0;
    double mean_abs_queue_error = 0.0; // bits, averaged over users
    bool pass = true;
};

CalibrationReport calibrate(const TwinSnapshot& twin, const PhysicalState& physical,
                            const CalibrationTolerances& tol = {});

/// Bounded history of physical states, single writer (the simulation loop).
class DigitalTwin
{
public:
    explicit DigitalTwin(std::size_t history_depth);

    /// Record `physical` (if not already recorded) and return the state as of
    /// now - delay.slots, delivered at `now`.
    TwinSnapshot sync(const PhysicalState& physical, DelayClass delay, Slot now);

    /// Record without producing a snapshot (slots between twin updates).
    void observe(const PhysicalState& physical);

    std::size_t depth() const { return depth_; }
    std::size_t size() const { return history_.size(); }

private:
    std::size_t depth_;
    std::deque<PhysicalState> history_;
};

} // namespace ntn
