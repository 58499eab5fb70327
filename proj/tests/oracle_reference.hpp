#pragma once

// Brute-force reference for the allocation objective, written from the
// formula rather than from the library code. Summation order matches the
// documented canonical order (per-user accumulation over blocks, users in id
// order) so objectives compare exactly.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ntn/domain.hpp"
#include "ntn/twin.hpp"

namespace ntn::testing {

inline double reference_objective(const AllocationMatrix& m, const TwinSnapshot& s, const NetworkLayout& l,
                                  const QoSRequirement& q, double penalty)
{
    std::vector<double> rate(l.num_users(), 0.0);
    for (std::size_t b = 0; b < m.size(); ++b) {
        if (m[b] >= 0) {
            const auto u = static_cast<std::size_t>(m[b]);
            rate[u] += l.grid.rb_bandwidth() * std::log2(1.0 + s.channel().at(u, b)) * l.slot_duration;
        }
    }
    double total = 0.0, urllc = 0.0, shortfall = 0.0;
    for (std::size_t u = 0; u < l.num_users(); ++u) {
        total += rate[u];
        if (l.users[u].service == ServiceClass::URLLC) {
            urllc += rate[u];
        } else {
            shortfall += std::max(0.0, q.embb_min_rate * l.slot_duration - rate[u]);
        }
    }
    const double demand = q.urllc_packet_size * s.traffic().urllc_rate;
    return total - penalty * std::max(0.0, demand - urllc) - penalty * shortfall;
}

inline double reference_penalty(const TwinSnapshot& s, const NetworkLayout& l, double scale)
{
    double best = 0.0;
    for (double snr : s.channel().values()) {
        best = std::max(best, l.grid.rb_bandwidth() * std::log2(1.0 + snr) * l.slot_duration);
    }
    return scale * best;
}

struct Enumerated
{
    AllocationMatrix best;
    double value = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
};

/// Visit every assignment of users to blocks in lexicographic order; keep the
/// first strict maximizer.
inline Enumerated enumerate_all(const TwinSnapshot& s, const NetworkLayout& l, const QoSRequirement& q,
                                double penalty)
{
    Enumerated out;
    AllocationMatrix m(l.num_rbs());
    std::function<void(std::size_t)> rec = [&](std::size_t b) {
        if (b == m.size()) {
            ++out.count;
            const double v = reference_objective(m, s, l, q, penalty);
            if (v > out.value) {
                out.value = v;
                out.best = m;
            }
            return;
        }
        for (std::size_t u = 0; u < l.num_users(); ++u) {
            m[b] = static_cast<UserId>(u);
            rec(b + 1);
        }
    };
    rec(0);
    return out;
}

} // namespace ntn::testing
