#include "ntn/twin.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace ntn {

const char* to_string(DelayLevel d)
{
    switch (d) {
    case DelayLevel::MINIMAL:
        return "minimal";
    case DelayLevel::MODERATE:
        return "moderate";
    case DelayLevel::SIGNIFICANT:
        return "significant";
    }
    return "?";
}

void DelayProfile::validate() const
{
    if (moderate > significant) {
        throw std::invalid_argument("delay profile needs moderate <= significant");
    }
}

DelayClass DelayClass::from(DelayLevel level, const DelayProfile& profile)
{
    profile.validate();
    switch (level) {
    case DelayLevel::MINIMAL:
        return {level, 0};
    case DelayLevel::MODERATE:
        return {level, profile.moderate};
    case DelayLevel::SIGNIFICANT:
        return {level, profile.significant};
    }
    return {};
}

TwinSnapshot::TwinSnapshot(Slot captured_at, Slot delivered_at, ChannelState channel,
                           TrafficState traffic, QoSRequirement qos, bool staleness_underflow)
    : captured_at_(captured_at), delivered_at_(delivered_at), channel_(std::move(channel)),
      traffic_(std::move(traffic)), qos_(qos), staleness_underflow_(staleness_underflow)
{
    if (delivered_at_ < captured_at_) {
        throw std::invalid_argument("snapshot delivered before it was captured");
    }
}

TwinSnapshot snapshot_of(const PhysicalState& physical)
{
    return TwinSnapshot(physical.clock.t, physical.clock.t, physical.channel, physical.traffic,
                        physical.qos);
}

Slot staleness(const TwinSnapshot& s, Slot now)
{
    if (now < s.captured_at()) {
        throw std::invalid_argument("staleness queried before capture time");
    }
    return now - s.captured_at();
}

TwinSnapshot summarize(std::span<const TwinSnapshot> history, Slot window)
{
    if (history.empty()) {
        throw std::invalid_argument("summarize: empty history");
    }
    if (window == 0) {
        throw std::invalid_argument("summarize: window must be >= 1");
    }
    const std::size_t n = std::min<std::size_t>(window, history.size());
    const auto members = history.subspan(history.size() - n);
    const TwinSnapshot& last = members.back();
    if (n == 1) {
        return last;
    }

    ChannelState ch(last.channel().num_users(), last.channel().num_rbs());
    TrafficState tr;
    tr.urllc_queue.assign(last.traffic().urllc_queue.size(), 0.0);
    tr.embb_fully_buffered = last.traffic().embb_fully_buffered;
    for (const auto& s : members) {
        if (s.channel().num_users() != ch.num_users() || s.channel().num_rbs() != ch.num_rbs() ||
            s.traffic().urllc_queue.size() != tr.urllc_queue.size()) {
            throw std::invalid_argument("summarize: snapshots have inconsistent dimensions");
        }
        auto dst = ch.values();
        auto src = s.channel().values();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += src[i];
        }
        for (std::size_t u = 0; u < tr.urllc_queue.size(); ++u) {
            tr.urllc_queue[u] += s.traffic().urllc_queue[u];
        }
        tr.urllc_rate += s.traffic().urllc_rate;
    }
    const double k = static_cast<double>(n);
    for (double& v : ch.values()) {
        v /= k;
    }
    for (double& q : tr.urllc_queue) {
        q /= k;
    }
    tr.urllc_rate /= k;
    return TwinSnapshot(last.captured_at(), last.delivered_at(), std::move(ch), std::move(tr),
                        last.qos(), last.staleness_underflow());
}

CalibrationReport calibrate(const TwinSnapshot& twin, const PhysicalState& physical,
                            const CalibrationTolerances& tol)
{
    const auto& a = twin.channel();
    const auto& b = physical.channel;
    if (a.num_users() != b.num_users() || a.num_rbs() != b.num_rbs() ||
        twin.traffic().urllc_queue.size() != physical.traffic.urllc_queue.size()) {
        throw std::invalid_argument(fmt::format(
            "calibrate: dimension mismatch (twin {}x{}, physical {}x{})", a.num_users(), a.num_rbs(),
            b.num_users(), b.num_rbs()));
    }

    CalibrationReport r;
    const auto av = a.values();
    const auto bv = b.values();
    double snr_sum = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        snr_sum += std::abs(av[i] - bv[i]);
    }
    r.mean_abs_snr_error = av.empty() ? 0.0 : snr_sum / static_cast<double>(av.size());

    const auto& qa = twin.traffic().urllc_queue;
    const auto& qb = physical.traffic.urllc_queue;
    double q_sum = 0.0;
    for (std::size_t u = 0; u < qa.size(); ++u) {
        q_sum += std::abs(qa[u] - qb[u]);
    }
    r.mean_abs_queue_error = qa.empty() ? 0.0 : q_sum / static_cast<double>(qa.size());

    r.pass = r.mean_abs_snr_error <= tol.snr && r.mean_abs_queue_error <= tol.queue;
    return r;
}

DigitalTwin::DigitalTwin(std::size_t history_depth) : depth_(history_depth)
{
    if (history_depth == 0) {
        throw std::invalid_argument("twin history depth must be >= 1");
    }
}

TwinSnapshot DigitalTwin::sync(const PhysicalState& physical, DelayClass delay, Slot now)
{
    if (now < physical.clock.t) {
        throw std::invalid_argument("sync: now precedes the physical clock");
    }
    observe(physical);

    const bool underflow = now < delay.slots || now - delay.slots < history_.front().clock.t;
    const Slot target = underflow ? history_.front().clock.t : now - delay.slots;

    // Latest recorded state at or before the target slot.
    const PhysicalState* pick = &history_.front();
    for (const auto& s : history_) {
        if (s.clock.t > target) {
            break;
        }
        pick = &s;
    }
    return TwinSnapshot(pick->clock.t, now, pick->channel, pick->traffic, pick->qos, underflow);
}

void DigitalTwin::observe(const PhysicalState& physical)
{
    if (history_.empty() || history_.back().clock.t < physical.clock.t) {
        history_.push_back(physical);
        while (history_.size() > depth_) {
            history_.pop_front();
        }
    }
}

} // namespace ntn
