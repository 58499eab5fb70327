#pragma once

// Physical layer: channel realizations, URLLC arrivals and realized rates,
// advanced one slot at a time.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ntn/domain.hpp"

namespace ntn {

using Rng = std::mt19937_64;

double db_to_linear(double db);

/// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// URLLC arrival rate lambda(t) in packets/slot. Pure in t so that twin,
/// policies and metrics can all query it without touching the run's rng.
class LambdaSchedule
{
public:
    enum class Mode { CONSTANT, UNIFORM, CYCLE };

    static LambdaSchedule constant(double lambda);
    /// Integer lambda drawn uniformly from [lo, hi] for each slot, keyed by seed.
    static LambdaSchedule uniform(double lo, double hi, std::uint64_t seed);
    /// Each value held for `hold` slots, then the next, wrapping around.
    static LambdaSchedule cycle(std::vector<double> values, Slot hold);

    double at(Slot t) const;

    Mode mode() const { return mode_; }
    double min_value() const;
    double max_value() const;
    const std::vector<double>& values() const { return values_; }
    Slot hold() const { return hold_; }
    std::uint64_t seed() const { return seed_; }

private:
    Mode mode_ = Mode::CONSTANT;
    std::vector<double> values_{0.0};
    Slot hold_ = 1;
    std::uint64_t seed_ = 0;
};

struct EnvConfig
{
    NetworkLayout layout;
    QoSRequirement qos;
    LambdaSchedule lambda = LambdaSchedule::constant(0.0);
};

struct PhysicalState
{
    SlotClock clock;
    ChannelState channel;
    TrafficState traffic;
    QoSRequirement qos;
};

struct SlotOutcome
{
    Slot t = 0;
    double lambda_t = 0.0;
    std::vector<double> rate;     // allocated capacity per user, bits/slot
    std::vector<double> served;   // bits actually delivered per user
    double embb_rate = 0.0;       // sum over eMBB users (fully buffered, served == rate)
    double urllc_rate = 0.0;      // R_u(t): sum of URLLC user rates
    double urllc_served = 0.0;
    std::uint64_t arrivals = 0;   // URLLC packets arriving during this slot

    bool operator==(const SlotOutcome&) const = default;
};

struct StepResult
{
    PhysicalState next;
    SlotOutcome outcome;
};

ChannelState step_channel(Rng& rng, std::span<const UserTerminal> users, const ResourceGrid& grid);

std::uint64_t urllc_arrivals(Rng& rng, double lambda);

/// Shannon rate of the blocks held by `user`, in bits per slot.
double user_rate(const AllocationMatrix& m, const ChannelState& ch, UserId user,
                 const ResourceGrid& grid, double slot_duration);

/// Rate of a single block for a single user, bits per slot.
inline double block_rate(double snr, const ResourceGrid& grid, double slot_duration)
{
    return grid.rb_bandwidth() * std::log2(1.0 + snr) * slot_duration;
}

/// Slot-0 state: fresh channel, one slot of arrivals already queued.
PhysicalState initial_state(const EnvConfig& cfg, Rng& rng);

/// Apply `decision` for the current slot: serve, drain URLLC queues, enqueue
/// this slot's arrivals (zeta bits each), draw the next channel.
StepResult advance(const PhysicalState& state, const AllocationMatrix& decision,
                   const EnvConfig& cfg, Rng& rng);

} // namespace ntn
