#pragma once

// Core vocabulary shared by the environment, the twin, the allocation
// policies and the metrics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ntn {

using Slot = std::uint64_t;
using UserId = std::int32_t;

inline constexpr UserId kUnassigned = -1;

/// Discrete simulation time. `t` advances by exactly one per step.
struct SlotClock
{
    Slot t = 0;
    double slot_duration = 1e-3; // seconds

    SlotClock next() const { return SlotClock{t + 1, slot_duration}; }
};

enum class ServiceClass { EMBB, URLLC };

const char* to_string(ServiceClass c);

enum class FadingModel { RAYLEIGH, RICIAN };

/// Small-scale fading, drawn i.i.d. per slot and per resource block.
/// For RICIAN an infinite k_factor means a pure line-of-sight channel.
struct FadingParams
{
    FadingModel model = FadingModel::RAYLEIGH;
    double k_factor = 0.0;
};

struct LinkBudget
{
    double mean_snr_db = 0.0;
    FadingParams fading;
};

struct UserTerminal
{
    UserId id = 0;
    ServiceClass service = ServiceClass::EMBB;
    LinkBudget link;
};

/// Throws std::invalid_argument unless ids are 0..n-1 in order.
/// Every component indexes per-user arrays by id, so this is the one
/// layout the simulator accepts.
void check_user_ids(std::span<const UserTerminal> users);

std::vector<UserId> users_of(std::span<const UserTerminal> users, ServiceClass c);

struct QoSRequirement
{
    double embb_min_rate = 0.0;            // bits/s
    double urllc_packet_size = 256.0;      // bits (32 bytes)
    double urllc_outage_threshold = 0.07;  // epsilon_max

    void validate() const;
};

class ResourceGrid
{
public:
    ResourceGrid(std::size_t num_rbs, double rb_bandwidth);

    std::size_t num_rbs() const { return num_rbs_; }
    double rb_bandwidth() const { return rb_bandwidth_; }
    double system_bandwidth() const { return system_bandwidth_; }

private:
    std::size_t num_rbs_;
    double rb_bandwidth_;
    double system_bandwidth_;
};

/// One entry per resource block: the user holding it, or kUnassigned.
using AllocationMatrix = std::vector<UserId>;

struct ValidationResult
{
    bool ok = true;
    bool length_mismatch = false;
    std::size_t index = 0;
    UserId offending = kUnassigned;
    std::string message;

    explicit operator bool() const { return ok; }
};

ValidationResult validate_allocation(const AllocationMatrix& m, const ResourceGrid& g,
                                     std::span<const UserTerminal> users);

struct SliceCounts
{
    std::size_t embb = 0;
    std::size_t urllc = 0;
    std::size_t unassigned = 0;

    bool operator==(const SliceCounts&) const = default;
};

SliceCounts slice_of(const AllocationMatrix& m, std::span<const UserTerminal> users);

/// Linear-scale SNR for every (user, resource block) pair of one slot.
class ChannelState
{
public:
    ChannelState() = default;
    ChannelState(std::size_t num_users, std::size_t num_rbs, double fill = 0.0);

    std::size_t num_users() const { return num_users_; }
    std::size_t num_rbs() const { return num_rbs_; }

    double at(std::size_t user, std::size_t rb) const { return snr_[user * num_rbs_ + rb]; }
    double& at(std::size_t user, std::size_t rb) { return snr_[user * num_rbs_ + rb]; }

    std::span<const double> values() const { return snr_; }
    std::span<double> values() { return snr_; }

    /// All entries finite and nonnegative.
    bool is_valid() const;

    bool operator==(const ChannelState&) const = default;

private:
    std::size_t num_users_ = 0;
    std::size_t num_rbs_ = 0;
    std::vector<double> snr_;
};

struct TrafficState
{
    double urllc_rate = 0.0;               // lambda, packets/slot (aggregate)
    std::vector<double> urllc_queue;       // bits, indexed by user id; eMBB entries stay 0
    bool embb_fully_buffered = true;

    bool operator==(const TrafficState&) const = default;
};

/// Static per-scenario layout every component needs.
struct NetworkLayout
{
    ResourceGrid grid;
    std::vector<UserTerminal> users;
    double slot_duration = 1e-3;

    std::size_t num_users() const { return users.size(); }
    std::size_t num_rbs() const { return grid.num_rbs(); }
    void validate() const;
};

} // namespace ntn
