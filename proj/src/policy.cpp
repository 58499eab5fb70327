#include "ntn/policy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "ntn/envsim.hpp"

namespace ntn {

std::string_view policy_id(PolicyKind k)
{
    switch (k) {
    case PolicyKind::ORTHOGONAL:
        return "orthogonal";
    case PolicyKind::ORACLE:
        return "oracle";
    case PolicyKind::DNN:
        return "dnn";
    case PolicyKind::DNN_REPAIR:
        return "dnn+repair";
    }
    return "?";
}

std::optional<PolicyKind> parse_policy(std::string_view id)
{
    for (const auto k : {PolicyKind::ORTHOGONAL, PolicyKind::ORACLE, PolicyKind::DNN,
                         PolicyKind::DNN_REPAIR}) {
        if (policy_id(k) == id) {
            return k;
        }
    }
    return std::nullopt;
}

void OrthogonalConfig::validate() const
{
    if (!(urllc_fraction >= 0.0 && urllc_fraction <= 1.0)) {
        throw std::invalid_argument("urllc_fraction must lie in [0, 1]");
    }
}

std::size_t urllc_partition_size(const OrthogonalConfig& cfg, std::size_t num_rbs)
{
    cfg.validate();
    const double raw = cfg.urllc_fraction * static_cast<double>(num_rbs);
    return std::min(num_rbs, static_cast<std::size_t>(std::floor(raw + 1e-9)));
}

namespace {

void deal_round_robin(AllocationMatrix& m, std::size_t first, std::size_t last,
                      const std::vector<UserId>& users, const ChannelState& ch)
{
    if (first == last) {
        return;
    }
    if (users.empty()) {
        throw std::invalid_argument("orthogonal_allocate: partition has blocks but no users");
    }
    std::vector<bool> served(users.size(), false);
    std::size_t remaining = users.size();
    for (std::size_t b = first; b < last; ++b) {
        if (remaining == 0) {
            served.assign(users.size(), false);
            remaining = users.size();
        }
        std::size_t best = users.size();
        for (std::size_t i = 0; i < users.size(); ++i) {
            if (served[i]) {
                continue;
            }
            if (best == users.size() ||
                ch.at(static_cast<std::size_t>(users[i]), b) >
                    ch.at(static_cast<std::size_t>(users[best]), b)) {
                best = i;
            }
        }
        served[best] = true;
        --remaining;
        m[b] = users[best];
    }
}

double slot_min_rate(const QoSRequirement& qos, const NetworkLayout& layout)
{
    return qos.embb_min_rate * layout.slot_duration;
}

double urllc_demand(const TwinSnapshot& snapshot, const QoSRequirement& qos)
{
    return qos.urllc_packet_size * snapshot.traffic().urllc_rate;
}

// Objective from per-user rates; shares the summation order documented on
// allocation_objective.
double objective_from_rates(const std::vector<double>& rate, const NetworkLayout& layout,
                            double demand, double min_rate, double penalty)
{
    double total = 0.0;
    double urllc = 0.0;
    double embb_shortfall = 0.0;
    for (const auto& user : layout.users) {
        const double r = rate[static_cast<std::size_t>(user.id)];
        total += r;
        if (user.service == ServiceClass::URLLC) {
            urllc += r;
        } else {
            embb_shortfall += std::max(0.0, min_rate - r);
        }
    }
    return total - penalty * std::max(0.0, demand - urllc) - penalty * embb_shortfall;
}

std::vector<double> rates_of(const AllocationMatrix& m, const TwinSnapshot& snapshot,
                             const NetworkLayout& layout)
{
    std::vector<double> rate(layout.num_users(), 0.0);
    for (std::size_t b = 0; b < m.size(); ++b) {
        if (m[b] != kUnassigned) {
            const auto u = static_cast<std::size_t>(m[b]);
            rate[u] += block_rate(snapshot.channel().at(u, b), layout.grid, layout.slot_duration);
        }
    }
    return rate;
}

void check_snapshot(const TwinSnapshot& snapshot, const NetworkLayout& layout, const char* who)
{
    const auto& ch = snapshot.channel();
    if (ch.num_users() != layout.num_users() || ch.num_rbs() != layout.num_rbs()) {
        throw std::invalid_argument(fmt::format("{}: snapshot is {}x{}, layout is {}x{}", who,
                                                ch.num_users(), ch.num_rbs(), layout.num_users(),
                                                layout.num_rbs()));
    }
}

PolicyDecision exhaustive(const TwinSnapshot& snapshot, const NetworkLayout& layout,
                          const QoSRequirement& qos, double penalty)
{
    const std::size_t n_users = layout.num_users();
    const std::size_t n_rbs = layout.num_rbs();
    AllocationMatrix current(n_rbs, 0);
    PolicyDecision best{current, -std::numeric_limits<double>::infinity(), "oracle"};
    // Odometer over users^num_rbs with block 0 most significant, so the first
    // maximizer found is the lexicographically smallest.
    while (true) {
        const double value = allocation_objective(current, snapshot, layout, qos, penalty);
        if (value > best.objective_estimate) {
            best.objective_estimate = value;
            best.allocation = current;
        }
        std::size_t pos = n_rbs;
        while (pos > 0) {
            --pos;
            if (static_cast<std::size_t>(++current[pos]) < n_users) {
                break;
            }
            current[pos] = 0;
            if (pos == 0) {
                return best;
            }
        }
        if (n_rbs == 0) {
            return best;
        }
    }
}

PolicyDecision greedy(const TwinSnapshot& snapshot, const NetworkLayout& layout,
                      const QoSRequirement& qos, double penalty)
{
    const std::size_t n_users = layout.num_users();
    const std::size_t n_rbs = layout.num_rbs();
    const auto& ch = snapshot.channel();
    const double demand = urllc_demand(snapshot, qos);
    const double min_rate = slot_min_rate(qos, layout);

    std::vector<double> block(n_users * n_rbs);
    for (std::size_t u = 0; u < n_users; ++u) {
        for (std::size_t b = 0; b < n_rbs; ++b) {
            block[u * n_rbs + b] = block_rate(ch.at(u, b), layout.grid, layout.slot_duration);
        }
    }

    AllocationMatrix m(n_rbs, kUnassigned);
    std::vector<double> rate(n_users, 0.0);
    double urllc = 0.0;
    for (std::size_t step = 0; step < n_rbs; ++step) {
        double best_gain = -std::numeric_limits<double>::infinity();
        std::size_t best_b = n_rbs;
        std::size_t best_u = n_users;
        for (std::size_t b = 0; b < n_rbs; ++b) {
            if (m[b] != kUnassigned) {
                continue;
            }
            for (std::size_t u = 0; u < n_users; ++u) {
                const double r = block[u * n_rbs + b];
                double gain = r;
                if (layout.users[u].service == ServiceClass::URLLC) {
                    gain += penalty * (std::max(0.0, demand - urllc) - std::max(0.0, demand - urllc - r));
                } else {
                    gain += penalty *
                            (std::max(0.0, min_rate - rate[u]) - std::max(0.0, min_rate - rate[u] - r));
                }
                if (gain > best_gain) {
                    best_gain = gain;
                    best_b = b;
                    best_u = u;
                }
            }
        }
        m[best_b] = static_cast<UserId>(best_u);
        rate[best_u] += block[best_u * n_rbs + best_b];
        if (layout.users[best_u].service == ServiceClass::URLLC) {
            urllc += block[best_u * n_rbs + best_b];
        }
    }
    return {m, allocation_objective(m, snapshot, layout, qos, penalty), "oracle"};
}

} // namespace

PolicyDecision orthogonal_allocate(const TwinSnapshot& snapshot, const OrthogonalConfig& cfg,
                                   const NetworkLayout& layout)
{
    check_snapshot(snapshot, layout, "orthogonal_allocate");
    const std::size_t n_rbs = layout.num_rbs();
    const std::size_t split = urllc_partition_size(cfg, n_rbs);
    AllocationMatrix m(n_rbs, kUnassigned);
    deal_round_robin(m, 0, split, users_of(layout.users, ServiceClass::URLLC), snapshot.channel());
    deal_round_robin(m, split, n_rbs, users_of(layout.users, ServiceClass::EMBB), snapshot.channel());
    const double value = allocation_objective(m, snapshot, layout, snapshot.qos(),
                                              default_penalty(snapshot, layout));
    return {m, value, std::string(policy_id(PolicyKind::ORTHOGONAL))};
}

double allocation_objective(const AllocationMatrix& m, const TwinSnapshot& snapshot,
                            const NetworkLayout& layout, const QoSRequirement& qos, double penalty)
{
    return objective_from_rates(rates_of(m, snapshot, layout), layout, urllc_demand(snapshot, qos),
                                slot_min_rate(qos, layout), penalty);
}

double default_penalty(const TwinSnapshot& snapshot, const NetworkLayout& layout, double scale)
{
    double best = 0.0;
    for (const double snr : snapshot.channel().values()) {
        best = std::max(best, block_rate(snr, layout.grid, layout.slot_duration));
    }
    return scale * best;
}

PolicyDecision oracle_allocate(const TwinSnapshot& snapshot, const NetworkLayout& layout,
                               const QoSRequirement& qos, const OracleConfig& cfg)
{
    check_snapshot(snapshot, layout, "oracle_allocate");
    if (layout.num_users() == 0) {
        throw std::invalid_argument("oracle_allocate: no users");
    }
    const double penalty = default_penalty(snapshot, layout, cfg.penalty_scale);

    // users^num_rbs, saturating at cap + 1.
    std::uint64_t space = 1;
    for (std::size_t b = 0; b < layout.num_rbs() && space <= cfg.exhaustive_cap; ++b) {
        const auto u = static_cast<std::uint64_t>(layout.num_users());
        space = space > (cfg.exhaustive_cap + 1) / u ? cfg.exhaustive_cap + 1 : space * u;
    }
    const bool fits = space <= cfg.exhaustive_cap;

    switch (cfg.mode) {
    case OracleConfig::Mode::EXHAUSTIVE:
        if (!fits) {
            throw OracleCapExceeded(fmt::format("exhaustive search over {}^{} exceeds cap {}",
                                                layout.num_users(), layout.num_rbs(),
                                                cfg.exhaustive_cap));
        }
        return exhaustive(snapshot, layout, qos, penalty);
    case OracleConfig::Mode::GREEDY:
        return greedy(snapshot, layout, qos, penalty);
    case OracleConfig::Mode::AUTO:
        return fits ? exhaustive(snapshot, layout, qos, penalty) : greedy(snapshot, layout, qos, penalty);
    }
    return {};
}

PolicyDecision dynamic_allocate(const TwinSnapshot& snapshot, const Mlp& net,
                                const NetworkLayout& layout, const QoSRequirement& qos,
                                const FeatureEncoder& encoder)
{
    check_snapshot(snapshot, layout, "dynamic_allocate");
    if (net.num_users() != layout.num_users() || net.num_rbs() != layout.num_rbs()) {
        throw std::invalid_argument(fmt::format(
            "dynamic_allocate: net decodes {} blocks x {} users, layout is {} x {}", net.num_rbs(),
            net.num_users(), layout.num_rbs(), layout.num_users()));
    }
    const auto y = forward(net, encoder.encode(snapshot, layout, qos));
    AllocationMatrix m = decode_output(y);
    if (auto v = validate_allocation(m, layout.grid, layout.users); !v) {
        throw std::logic_error("decoded allocation is invalid: " + v.message);
    }
    const double value = allocation_objective(m, snapshot, layout, qos, default_penalty(snapshot, layout));
    return {std::move(m), value, std::string(policy_id(PolicyKind::DNN))};
}

RepairOutcome priority_repair(const PolicyDecision& decision, const TwinSnapshot& snapshot,
                              const QoSRequirement& qos, const NetworkLayout& layout)
{
    check_snapshot(snapshot, layout, "priority_repair");
    if (auto v = validate_allocation(decision.allocation, layout.grid, layout.users); !v) {
        throw std::invalid_argument("priority_repair: " + v.message);
    }
    RepairOutcome out{decision, 0, false};
    auto& m = out.decision.allocation;
    const auto urllc_users = users_of(layout.users, ServiceClass::URLLC);
    const double demand = urllc_demand(snapshot, qos);
    const auto& ch = snapshot.channel();
    auto rate = [&](UserId u, std::size_t b) {
        return block_rate(ch.at(static_cast<std::size_t>(u), b), layout.grid, layout.slot_duration);
    };

    double predicted = 0.0;
    for (std::size_t b = 0; b < m.size(); ++b) {
        if (m[b] != kUnassigned && layout.users[static_cast<std::size_t>(m[b])].service == ServiceClass::URLLC) {
            predicted += rate(m[b], b);
        }
    }

    while (predicted < demand) {
        std::size_t best_b = m.size();
        UserId best_u = kUnassigned;
        double best_r = -1.0;
        for (std::size_t b = 0; b < m.size(); ++b) {
            const bool eligible =
                m[b] == kUnassigned || layout.users[static_cast<std::size_t>(m[b])].service == ServiceClass::EMBB;
            if (!eligible) {
                continue;
            }
            for (const UserId u : urllc_users) {
                const double r = rate(u, b);
                if (r > best_r) {
                    best_r = r;
                    best_b = b;
                    best_u = u;
                }
            }
        }
        if (best_b == m.size()) {
            out.exhausted = true;
            break;
        }
        m[best_b] = best_u;
        predicted += best_r;
        ++out.moved;
    }

    if (out.moved > 0) {
        out.decision.objective_estimate =
            allocation_objective(m, snapshot, layout, qos, default_penalty(snapshot, layout));
    }
    if (decision.policy_id == policy_id(PolicyKind::DNN)) {
        out.decision.policy_id = std::string(policy_id(PolicyKind::DNN_REPAIR));
    }
    return out;
}

} // namespace ntn
