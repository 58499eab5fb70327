#pragma once

// Allocation strategies. Every policy is a pure function of a twin snapshot
// and its own parameters.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ntn/domain.hpp"
#include "ntn/nn.hpp"
#include "ntn/twin.hpp"

namespace ntn {

enum class PolicyKind { ORTHOGONAL, ORACLE, DNN, DNN_REPAIR };

std::string_view policy_id(PolicyKind k);
/// Accepts the ids "orthogonal", "oracle", "dnn", "dnn+repair".
std::optional<PolicyKind> parse_policy(std::string_view id);

struct PolicyDecision
{
    AllocationMatrix allocation;
    double objective_estimate = 0.0;
    std::string policy_id;
};

struct OrthogonalConfig
{
    double urllc_fraction = 0.5;

    void validate() const;
};

/// Number of leading blocks reserved for URLLC.
std::size_t urllc_partition_size(const OrthogonalConfig& cfg, std::size_t num_rbs);

/// Static split: blocks [0, n) serve URLLC, [n, num_rbs) serve eMBB. Inside a
/// partition, blocks are dealt round-robin; each block goes to the user with
/// the best SNR among those not yet served in the current round.
PolicyDecision orthogonal_allocate(const TwinSnapshot& snapshot, const OrthogonalConfig& cfg,
                                   const NetworkLayout& layout);

/// Objective shared by the oracle and the training labels:
///   sum of user rates
///   - penalty * max(0, zeta*lambda - R_u)
///   - penalty * sum over eMBB of max(0, min_rate*slot - rate_u)
/// Rates are bits/slot from the snapshot channel. Per-user rates accumulate in
/// block order, then users are summed in id order.
double allocation_objective(const AllocationMatrix& m, const TwinSnapshot& snapshot,
                            const NetworkLayout& layout, const QoSRequirement& qos, double penalty);

/// scale x the largest single-block rate in the snapshot.
double default_penalty(const TwinSnapshot& snapshot, const NetworkLayout& layout, double scale = 10.0);

struct OracleConfig
{
    enum class Mode { AUTO, EXHAUSTIVE, GREEDY };

    Mode mode = Mode::AUTO;
    std::uint64_t exhaustive_cap = 4096; // users^num_rbs, 4^6
    double penalty_scale = 10.0;
};

class OracleCapExceeded : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Exhaustive: the objective maximizer, ties to the lexicographically smallest
/// allocation. Greedy: one block at a time by best marginal objective, ties to
/// lowest block index then lowest user id.
PolicyDecision oracle_allocate(const TwinSnapshot& snapshot, const NetworkLayout& layout,
                               const QoSRequirement& qos, const OracleConfig& cfg = {});

PolicyDecision dynamic_allocate(const TwinSnapshot& snapshot, const Mlp& net,
                                const NetworkLayout& layout, const QoSRequirement& qos,
                                const FeatureEncoder& encoder = {});

struct RepairOutcome
{
    PolicyDecision decision;
    std::size_t moved = 0;
    /// Constraint still unmet after every eligible block was handed to URLLC.
    bool exhausted = false;
};

/// Moves blocks to URLLC until the predicted R_u (snapshot channel) exceeds
/// zeta * lambda. Eligible blocks are those held by eMBB users or idle;
/// URLLC-held blocks are never touched.
RepairOutcome priority_repair(const PolicyDecision& decision, const TwinSnapshot& snapshot,
                              const QoSRequirement& qos, const NetworkLayout& layout);

} // namespace ntn
