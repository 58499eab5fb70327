#include <gtest/gtest.h>

#include "ntn/twin.hpp"
#include "test_support.hpp"

using namespace ntn;
using ntn::testing::make_layout;

namespace {

EnvConfig rayleigh_env(double lambda)
{
    EnvConfig env{make_layout(2, 2, 4), {}, LambdaSchedule::constant(lambda)};
    for (auto& u : env.layout.users) {
        u.link.fading = {FadingModel::RAYLEIGH, 0.0};
    }
    return env;
}

struct Chain
{
    EnvConfig env;
    Rng rng;
    PhysicalState state;

    explicit Chain(std::uint64_t seed, double lambda = 4.0)
        : env(rayleigh_env(lambda)), rng(seed), state(initial_state(env, rng))
    {
    }

    void step() { state = advance(state, {0, 1, 2, 3}, env, rng).next; }
};

} // namespace

TEST(Twin, MinimalDelayIsExactCopy)
{
    Chain c(1);
    DigitalTwin twin(4);
    for (int i = 0; i < 50; ++i) {
        auto snap = twin.sync(c.state, {}, c.state.clock.t);
        EXPECT_EQ(snap.channel(), c.state.channel);
        EXPECT_EQ(snap.traffic(), c.state.traffic);
        auto cal = calibrate(snap, c.state);
        EXPECT_EQ(cal.mean_abs_snr_error, 0.0);
        EXPECT_EQ(cal.mean_abs_queue_error, 0.0);
        EXPECT_TRUE(cal.pass);
        c.step();
    }
}

TEST(Twin, ModerateDelayArithmetic)
{
    Chain c(2);
    DigitalTwin twin(8);
    const auto delay = DelayClass::from(DelayLevel::MODERATE, {});
    EXPECT_EQ(delay.slots, 2u);
    std::optional<TwinSnapshot> last;
    while (c.state.clock.t <= 10) {
        last.emplace(twin.sync(c.state, delay, c.state.clock.t));
        if (c.state.clock.t < 10) {
            c.step();
        } else {
            break;
        }
    }
    EXPECT_EQ(last->captured_at(), 8u);
    EXPECT_EQ(last->delivered_at(), 10u);
    EXPECT_FALSE(last->staleness_underflow());
}

TEST(Twin, StalenessEqualsDelayAfterWarmup)
{
    for (const auto level : {DelayLevel::MODERATE, DelayLevel::SIGNIFICANT}) {
        Chain c(3);
        const auto delay = DelayClass::from(level, {});
        DigitalTwin twin(delay.slots + 1);
        bool diverged = false;
        for (int i = 0; i < 200; ++i) {
            const Slot now = c.state.clock.t;
            auto snap = twin.sync(c.state, delay, now);
            if (now >= delay.slots) {
                EXPECT_EQ(staleness(snap, now), delay.slots);
                EXPECT_FALSE(snap.staleness_underflow());
                diverged = diverged || !calibrate(snap, c.state).pass;
            } else {
                EXPECT_TRUE(snap.staleness_underflow());
                EXPECT_EQ(snap.captured_at(), 0u);
            }
            c.step();
        }
        EXPECT_TRUE(diverged) << to_string(level);
    }
}

TEST(Twin, SnapshotIsIndependentOfLaterMutation)
{
    Chain c(4);
    DigitalTwin twin(2);
    auto snap = twin.sync(c.state, {}, 0);
    const auto before = snap.channel();
    c.state.channel.at(0, 0) += 100.0;
    c.state.traffic.urllc_queue[2] = 1e9;
    EXPECT_EQ(snap.channel(), before);
    EXPECT_NE(snap.traffic().urllc_queue[2], 1e9);
}

TEST(Staleness, Values)
{
    TwinSnapshot s(5, 5, ChannelState(1, 1), {}, {});
    EXPECT_EQ(staleness(s, 5), 0u);
    EXPECT_EQ(staleness(s, 9), 4u);
    Slot prev = 0;
    for (Slot now = 5; now < 20; ++now) {
        EXPECT_GE(staleness(s, now), prev);
        prev = staleness(s, now);
    }
    EXPECT_THROW(staleness(s, 4), std::invalid_argument);
    EXPECT_THROW(TwinSnapshot(5, 4, ChannelState(1, 1), {}, {}), std::invalid_argument);
}

TEST(Summarize, MeanAndDegenerateCases)
{
    TrafficState tr{1.0, {0.0}, true};
    std::vector<TwinSnapshot> h{TwinSnapshot(0, 0, ChannelState(1, 1, 2.0), tr, {}),
                                TwinSnapshot(1, 1, ChannelState(1, 1, 4.0), tr, {})};
    EXPECT_EQ(summarize(h, 2).channel().at(0, 0), 3.0);
    EXPECT_EQ(summarize(h, 2).captured_at(), 1u);
    EXPECT_EQ(summarize(h, 1).channel().at(0, 0), 4.0);

    std::vector<TwinSnapshot> flat(3, TwinSnapshot(0, 0, ChannelState(2, 2, 1.5), tr, {}));
    auto s = summarize(flat, 3);
    EXPECT_EQ(s.channel(), flat[0].channel());
    EXPECT_EQ(s.traffic(), flat[0].traffic());
}

TEST(Calibrate, ConstantOffset)
{
    Chain c(5);
    auto ch = c.state.channel;
    for (double& v : ch.values()) {
        v += 0.5;
    }
    TwinSnapshot snap(0, 0, ch, c.state.traffic, c.state.qos);
    auto r = calibrate(snap, c.state);
    EXPECT_NEAR(r.mean_abs_snr_error, 0.5, 1e-12);
    EXPECT_FALSE(r.pass);

    TwinSnapshot wrong(0, 0, ChannelState(1, 1), c.state.traffic, c.state.qos);
    EXPECT_THROW(calibrate(wrong, c.state), std::invalid_argument);
}
