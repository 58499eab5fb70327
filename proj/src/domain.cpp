#include "ntn/domain.hpp"

#include <cmath>

#include <fmt/format.h>

namespace ntn {

const char* to_string(ServiceClass c)
{
    return c == ServiceClass::EMBB ? "embb" : "urllc";
}

void check_user_ids(std::span<const UserTerminal> users)
{
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (users[i].id != static_cast<UserId>(i)) {
            throw std::invalid_argument(
                fmt::format("user ids must be 0..n-1 in order (position {} has id {})", i, users[i].id));
        }
        if (!std::isfinite(users[i].link.mean_snr_db)) {
            throw std::invalid_argument(fmt::format("user {} has non-finite mean_snr_db", i));
        }
        const auto& f = users[i].link.fading;
        if (f.model == FadingModel::RICIAN && !(f.k_factor >= 0.0)) {
            throw std::invalid_argument(fmt::format("user {} has negative k_factor", i));
        }
    }
}

std::vector<UserId> users_of(std::span<const UserTerminal> users, ServiceClass c)
{
    std::vector<UserId> out;
    for (const auto& u : users) {
        if (u.service == c) {
            out.push_back(u.id);
        }
    }
    return out;
}

void QoSRequirement::validate() const
{
    if (!(urllc_packet_size > 0.0)) {
        throw std::invalid_argument("urllc_packet_size must be > 0");
    }
    if (!(urllc_outage_threshold > 0.0 && urllc_outage_threshold < 1.0)) {
        throw std::invalid_argument("urllc_outage_threshold out of range");
    }
    if (!(embb_min_rate >= 0.0)) {
        throw std::invalid_argument("embb_min_rate must be >= 0");
    }
}

ResourceGrid::ResourceGrid(std::size_t num_rbs, double rb_bandwidth)
    : num_rbs_(num_rbs), rb_bandwidth_(rb_bandwidth),
      system_bandwidth_(static_cast<double>(num_rbs) * rb_bandwidth)
{
    if (num_rbs == 0) {
        throw std::invalid_argument("num_rbs must be >= 1");
    }
    if (!(rb_bandwidth > 0.0) || !std::isfinite(rb_bandwidth)) {
        throw std::invalid_argument("rb_bandwidth must be > 0");
    }
}

ValidationResult validate_allocation(const AllocationMatrix& m, const ResourceGrid& g,
                                     std::span<const UserTerminal> users)
{
    ValidationResult r;
    if (m.size() != g.num_rbs()) {
        r.ok = false;
        r.length_mismatch = true;
        r.message = fmt::format("length mismatch: allocation has {} entries, grid has {} blocks",
                                m.size(), g.num_rbs());
        return r;
    }
    for (std::size_t b = 0; b < m.size(); ++b) {
        const UserId u = m[b];
        if (u == kUnassigned) {
            continue;
        }
        const bool known = u >= 0 && static_cast<std::size_t>(u) < users.size() &&
                           users[static_cast<std::size_t>(u)].id == u;
        if (!known) {
            r.ok = false;
            r.index = b;
            r.offending = u;
            r.message = fmt::format("block {} assigned to unknown user {}", b, u);
            return r;
        }
    }
    return r;
}

SliceCounts slice_of(const AllocationMatrix& m, std::span<const UserTerminal> users)
{
    SliceCounts c;
    for (const UserId u : m) {
        if (u == kUnassigned) {
            ++c.unassigned;
        } else if (users[static_cast<std::size_t>(u)].service == ServiceClass::EMBB) {
            ++c.embb;
        } else {
            ++c.urllc;
        }
    }
    return c;
}

ChannelState::ChannelState(std::size_t num_users, std::size_t num_rbs, double fill)
    : num_users_(num_users), num_rbs_(num_rbs), snr_(num_users * num_rbs, fill)
{
}

bool ChannelState::is_valid() const
{
    for (const double v : snr_) {
        if (!std::isfinite(v) || v < 0.0) {
            return false;
        }
    }
    return true;
}

void NetworkLayout::validate() const
{
    check_user_ids(users);
    if (!(slot_duration > 0.0)) {
        throw std::invalid_argument("slot_duration must be > 0");
    }
}

} // namespace ntn
