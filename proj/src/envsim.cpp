#include "ntn/envsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace ntn {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

namespace {

double fading_gain(Rng& rng, const FadingParams& f)
{
    if (f.model == FadingModel::RAYLEIGH) {
        std::exponential_distribution<double> power(1.0);
        return power(rng);
    }
    if (std::isinf(f.k_factor)) {
        return 1.0;
    }
    const double los = std::sqrt(f.k_factor / (f.k_factor + 1.0));
    const double sigma = std::sqrt(0.5 / (f.k_factor + 1.0));
    std::normal_distribution<double> n(0.0, sigma);
    const double re = los + n(rng);
    const double im = n(rng);
    return re * re + im * im;
}

} // namespace

double db_to_linear(double db)
{
    return std::pow(10.0, db / 10.0);
}

LambdaSchedule LambdaSchedule::constant(double lambda)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be >= 0");
    }
    LambdaSchedule s;
    s.values_ = {lambda};
    return s;
}

LambdaSchedule LambdaSchedule::uniform(double lo, double hi, std::uint64_t seed)
{
    if (!(lo >= 0.0) || !(hi >= lo) || std::floor(lo) != lo || std::floor(hi) != hi) {
        throw std::invalid_argument("uniform lambda needs integer bounds 0 <= min <= max");
    }
    LambdaSchedule s;
    s.mode_ = Mode::UNIFORM;
    s.values_ = {lo, hi};
    s.seed_ = seed;
    return s;
}

LambdaSchedule LambdaSchedule::cycle(std::vector<double> values, Slot hold)
{
    if (values.empty() || hold == 0) {
        throw std::invalid_argument("cycle lambda needs at least one value and hold >= 1");
    }
    for (const double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("lambda must be >= 0");
        }
    }
    LambdaSchedule s;
    s.mode_ = Mode::CYCLE;
    s.values_ = std::move(values);
    s.hold_ = hold;
    return s;
}

double LambdaSchedule::at(Slot t) const
{
    switch (mode_) {
    case Mode::CONSTANT:
        return values_[0];
    case Mode::UNIFORM: {
        const auto span = static_cast<std::uint64_t>(values_[1] - values_[0]) + 1;
        return values_[0] + static_cast<double>(splitmix64(seed_ ^ splitmix64(t)) % span);
    }
    case Mode::CYCLE:
        return values_[(t / hold_) % values_.size()];
    }
    return 0.0;
}

double LambdaSchedule::min_value() const
{
    return *std::min_element(values_.begin(), values_.end());
}

double LambdaSchedule::max_value() const
{
    return *std::max_element(values_.begin(), values_.end());
}

ChannelState step_channel(Rng& rng, std::span<const UserTerminal> users, const ResourceGrid& grid)
{
    ChannelState ch(users.size(), grid.num_rbs());
    for (std::size_t u = 0; u < users.size(); ++u) {
        const double mean = db_to_linear(users[u].link.mean_snr_db);
        for (std::size_t b = 0; b < grid.num_rbs(); ++b) {
            ch.at(u, b) = mean * fading_gain(rng, users[u].link.fading);
        }
    }
    return ch;
}

std::uint64_t urllc_arrivals(Rng& rng, double lambda)
{
    if (lambda <= 0.0) {
        return 0;
    }
    std::poisson_distribution<std::int64_t> d(lambda);
    return static_cast<std::uint64_t>(d(rng));
}

double user_rate(const AllocationMatrix& m, const ChannelState& ch, UserId user,
                 const ResourceGrid& grid, double slot_duration)
{
    double rate = 0.0;
    for (std::size_t b = 0; b < m.size(); ++b) {
        if (m[b] == user) {
            rate += block_rate(ch.at(static_cast<std::size_t>(user), b), grid, slot_duration);
        }
    }
    return rate;
}

namespace {

// Poisson(lambda) split evenly over URLLC users, one draw per user.
std::uint64_t enqueue_arrivals(TrafficState& traffic, const std::vector<UserId>& urllc,
                               double lambda, double packet_bits, Rng& rng)
{
    std::uint64_t total = 0;
    if (urllc.empty()) {
        return total;
    }
    const double per_user = lambda / static_cast<double>(urllc.size());
    for (const UserId u : urllc) {
        const std::uint64_t n = urllc_arrivals(rng, per_user);
        traffic.urllc_queue[static_cast<std::size_t>(u)] += static_cast<double>(n) * packet_bits;
        total += n;
    }
    return total;
}

} // namespace

PhysicalState initial_state(const EnvConfig& cfg, Rng& rng)
{
    const auto& layout = cfg.layout;
    PhysicalState s;
    s.clock = SlotClock{0, layout.slot_duration};
    s.qos = cfg.qos;
    s.channel = step_channel(rng, layout.users, layout.grid);
    s.traffic.urllc_rate = cfg.lambda.at(0);
    s.traffic.urllc_queue.assign(layout.num_users(), 0.0);
    enqueue_arrivals(s.traffic, users_of(layout.users, ServiceClass::URLLC), s.traffic.urllc_rate,
                     cfg.qos.urllc_packet_size, rng);
    return s;
}

StepResult advance(const PhysicalState& state, const AllocationMatrix& decision,
                   const EnvConfig& cfg, Rng& rng)
{
    const auto& layout = cfg.layout;
    if (auto v = validate_allocation(decision, layout.grid, layout.users); !v) {
        throw std::invalid_argument("advance: " + v.message);
    }

    StepResult r{state, {}};
    auto& out = r.outcome;
    out.t = state.clock.t;
    out.lambda_t = state.traffic.urllc_rate;
    out.rate.assign(layout.num_users(), 0.0);
    out.served.assign(layout.num_users(), 0.0);

    for (std::size_t b = 0; b < decision.size(); ++b) {
        const UserId u = decision[b];
        if (u != kUnassigned) {
            out.rate[static_cast<std::size_t>(u)] +=
                block_rate(state.channel.at(static_cast<std::size_t>(u), b), layout.grid,
                           layout.slot_duration);
        }
    }

    auto& traffic = r.next.traffic;
    for (const auto& user : layout.users) {
        const auto u = static_cast<std::size_t>(user.id);
        if (user.service == ServiceClass::EMBB) {
            out.served[u] = out.rate[u];
            out.embb_rate += out.rate[u];
        } else {
            const double drained = std::min(out.rate[u], traffic.urllc_queue[u]);
            traffic.urllc_queue[u] -= drained;
            out.served[u] = drained;
            out.urllc_rate += out.rate[u];
            out.urllc_served += drained;
        }
    }

    out.arrivals = enqueue_arrivals(traffic, users_of(layout.users, ServiceClass::URLLC),
                                    state.traffic.urllc_rate, cfg.qos.urllc_packet_size, rng);

    r.next.clock = state.clock.next();
    r.next.traffic.urllc_rate = cfg.lambda.at(r.next.clock.t);
    r.next.channel = step_channel(rng, layout.users, layout.grid);
    return r;
}

} // namespace ntn
