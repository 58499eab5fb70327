#include <gtest/gtest.h>

#include <random>

#include "ntn/policy.hpp"
#include "oracle_reference.hpp"
#include "test_support.hpp"

using namespace ntn;
using namespace ntn::testing;

namespace {

ChannelState random_channel(std::mt19937_64& rng, std::size_t users, std::size_t rbs)
{
    std::exponential_distribution<double> e(0.3);
    ChannelState ch(users, rbs);
    for (double& v : ch.values()) {
        v = e(rng);
    }
    return ch;
}

NetworkLayout random_layout(std::mt19937_64& rng, std::size_t users, std::size_t rbs)
{
    std::bernoulli_distribution coin(0.5);
    auto l = make_layout(0, 0, rbs);
    for (std::size_t i = 0; i < users; ++i) {
        UserTerminal u;
        u.id = static_cast<UserId>(i);
        u.service = coin(rng) ? ServiceClass::URLLC : ServiceClass::EMBB;
        l.users.push_back(u);
    }
    return l;
}

double predicted_urllc(const AllocationMatrix& m, const TwinSnapshot& s, const NetworkLayout& l)
{
    double r = 0.0;
    for (auto u : users_of(l.users, ServiceClass::URLLC)) {
        r += user_rate(m, s.channel(), u, l.grid, l.slot_duration);
    }
    return r;
}

} // namespace

TEST(Orthogonal, HalfSplit)
{
    auto l = make_layout(3, 3, 10);
    std::mt19937_64 rng(1);
    auto d = orthogonal_allocate(make_snapshot(l, random_channel(rng, 6, 10), 10), {0.5}, l);
    EXPECT_EQ(slice_of(d.allocation, l.users), (SliceCounts{5, 5, 0}));
    for (std::size_t b = 0; b < 5; ++b) {
        EXPECT_EQ(l.users[static_cast<std::size_t>(d.allocation[b])].service, ServiceClass::URLLC);
    }
    EXPECT_EQ(d.policy_id, "orthogonal");
}

TEST(Orthogonal, Boundaries)
{
    std::mt19937_64 rng(2);
    auto l = make_layout(2, 1, 6);
    auto snap = make_snapshot(l, random_channel(rng, 3, 6), 10);
    EXPECT_EQ(slice_of(orthogonal_allocate(snap, {0.0}, l).allocation, l.users), (SliceCounts{6, 0, 0}));
    auto all = orthogonal_allocate(snap, {1.0}, l).allocation;
    EXPECT_EQ(all, AllocationMatrix(6, 2));
    EXPECT_THROW(orthogonal_allocate(snap, {1.5}, l), std::invalid_argument);

    auto no_urllc = make_layout(2, 0, 4);
    EXPECT_THROW(orthogonal_allocate(make_snapshot(no_urllc, ChannelState(2, 4, 1.0), 0), {0.5}, no_urllc),
                 std::invalid_argument);
}

TEST(Orthogonal, RoundRobinServesEveryUserOncePerRound)
{
    auto l = make_layout(4, 2, 10);
    std::mt19937_64 rng(3);
    auto m = orthogonal_allocate(make_snapshot(l, random_channel(rng, 6, 10), 0), {0.4}, l).allocation;
    // 4 URLLC blocks over 2 users, 6 eMBB blocks over 4 users: nobody gets a
    // second block before everyone in the slice has one.
    std::vector<int> held(6, 0);
    for (auto u : m) {
        ++held[static_cast<std::size_t>(u)];
    }
    EXPECT_EQ(held[4], 2);
    EXPECT_EQ(held[5], 2);
    for (std::size_t u = 0; u < 4; ++u) {
        EXPECT_GE(held[u], 1);
        EXPECT_LE(held[u], 2);
    }
}

TEST(Orthogonal, PartitionFixedAcrossSlots)
{
    auto l = make_layout(3, 2, 8);
    std::mt19937_64 rng(4);
    std::vector<bool> urllc_block;
    for (int i = 0; i < 100; ++i) {
        auto m = orthogonal_allocate(make_snapshot(l, random_channel(rng, 5, 8), 50), {0.5}, l).allocation;
        std::vector<bool> cls;
        for (auto u : m) {
            cls.push_back(l.users[static_cast<std::size_t>(u)].service == ServiceClass::URLLC);
        }
        if (urllc_block.empty()) {
            urllc_block = cls;
        }
        EXPECT_EQ(cls, urllc_block);
    }
}

TEST(Oracle, SingleUserTakesEverything)
{
    auto l = make_layout(1, 0, 7);
    std::mt19937_64 rng(5);
    auto snap = make_snapshot(l, random_channel(rng, 1, 7), 0);
    for (auto mode : {OracleConfig::Mode::GREEDY, OracleConfig::Mode::AUTO}) {
        OracleConfig cfg;
        cfg.mode = mode;
        EXPECT_EQ(oracle_allocate(snap, l, {}, cfg).allocation, AllocationMatrix(7, 0));
    }
}

TEST(Oracle, TwoByTwoFollowsStrongerBlocks)
{
    auto l = make_layout(2, 0, 2);
    ChannelState ch(2, 2);
    ch.at(0, 0) = 10.0;
    ch.at(0, 1) = 1.0;
    ch.at(1, 0) = 1.0;
    ch.at(1, 1) = 10.0;
    auto snap = make_snapshot(l, ch, 0);
    OracleConfig cfg;
    cfg.mode = OracleConfig::Mode::EXHAUSTIVE;
    auto d = oracle_allocate(snap, l, {}, cfg);
    EXPECT_EQ(d.allocation, (AllocationMatrix{0, 1}));
    auto ref = enumerate_all(snap, l, {}, reference_penalty(snap, l, 10.0));
    EXPECT_EQ(ref.count, 4u);
    EXPECT_EQ(ref.best, d.allocation);
    EXPECT_EQ(ref.value, d.objective_estimate);
}

TEST(Oracle, ExhaustiveMatchesEnumeration)
{
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> users(1, 3), rbs(1, 4), coarse(0, 2);
    std::uniform_real_distribution<double> lam(0.0, 12.0);
    OracleConfig cfg;
    cfg.mode = OracleConfig::Mode::EXHAUSTIVE;
    for (int i = 0; i < 300; ++i) {
        auto l = random_layout(rng, users(rng), rbs(rng));
        l.grid = ResourceGrid(l.grid.num_rbs(), 1e5);
        auto ch = random_channel(rng, l.num_users(), l.num_rbs());
        if (i % 3 == 0) {
            // Repeated values force exact ties between allocations.
            for (double& v : ch.values()) {
                v = std::array{0.0, 1.0, 3.0}[static_cast<std::size_t>(coarse(rng))];
            }
        }
        QoSRequirement q;
        q.embb_min_rate = i % 2 ? 0.0 : 1e5;
        auto snap = make_snapshot(l, ch, lam(rng), q);
        auto d = oracle_allocate(snap, l, q, cfg);
        auto ref = enumerate_all(snap, l, q, reference_penalty(snap, l, cfg.penalty_scale));
        ASSERT_EQ(d.allocation, ref.best) << "instance " << i;
        ASSERT_EQ(d.objective_estimate, ref.value) << "instance " << i;
    }
}

TEST(Oracle, GreedyCloseToExhaustive)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lam(0.0, 12.0);
    int close = 0;
    OracleConfig ex, gr;
    ex.mode = OracleConfig::Mode::EXHAUSTIVE;
    gr.mode = OracleConfig::Mode::GREEDY;
    for (int i = 0; i < 100; ++i) {
        auto l = random_layout(rng, 3, 4);
        l.grid = ResourceGrid(4, 1e5);
        auto snap = make_snapshot(l, random_channel(rng, 3, 4), lam(rng));
        const double e = oracle_allocate(snap, l, {}, ex).objective_estimate;
        const double g = oracle_allocate(snap, l, {}, gr).objective_estimate;
        EXPECT_GE(e, g);
        close += std::abs(e - g) <= 0.05 * std::abs(e) ? 1 : 0;
    }
    EXPECT_GE(close, 95);
}

TEST(Oracle, ScaleInvariantWithoutPenalty)
{
    std::mt19937_64 rng(8);
    OracleConfig cfg;
    cfg.mode = OracleConfig::Mode::EXHAUSTIVE;
    cfg.penalty_scale = 0.0;
    for (int i = 0; i < 50; ++i) {
        auto l = random_layout(rng, 3, 4);
        auto ch = random_channel(rng, 3, 4);
        auto scaled = ch;
        for (double& v : scaled.values()) {
            v *= 7.5;
        }
        EXPECT_EQ(oracle_allocate(make_snapshot(l, ch, 5), l, {}, cfg).allocation,
                  oracle_allocate(make_snapshot(l, scaled, 5), l, {}, cfg).allocation);
    }
}

TEST(Oracle, CapAndAutoMode)
{
    auto l = make_layout(5, 5, 10);
    std::mt19937_64 rng(9);
    auto snap = make_snapshot(l, random_channel(rng, 10, 10), 10);
    OracleConfig cfg;
    cfg.mode = OracleConfig::Mode::EXHAUSTIVE;
    EXPECT_THROW(oracle_allocate(snap, l, {}, cfg), OracleCapExceeded);
    cfg.mode = OracleConfig::Mode::AUTO;
    EXPECT_TRUE(validate_allocation(oracle_allocate(snap, l, {}, cfg).allocation, l.grid, l.users));
}

TEST(Dynamic, ZeroNetGivesEverythingToFirstUser)
{
    auto l = make_layout(2, 2, 3);
    FeatureEncoder enc;
    auto net = Mlp::zeros(mlp_layout(FeatureEncoder::input_dim(l), {8}, 12), 4);
    std::mt19937_64 rng(10);
    auto snap = make_snapshot(l, random_channel(rng, 4, 3), 20);
    auto d = dynamic_allocate(snap, net, l, {}, enc);
    EXPECT_EQ(d.allocation, AllocationMatrix(3, 0));
    EXPECT_EQ(d.policy_id, "dnn");
}

TEST(Dynamic, Deterministic)
{
    auto l = make_layout(2, 2, 3);
    auto net = Mlp::glorot(mlp_layout(FeatureEncoder::input_dim(l), {16, 8}, 12), 4, 3);
    std::mt19937_64 rng(11);
    auto snap = make_snapshot(l, random_channel(rng, 4, 3), 20);
    auto a = dynamic_allocate(snap, net, l, {});
    auto b = dynamic_allocate(snap, net, l, {});
    EXPECT_EQ(a.allocation, b.allocation);
    EXPECT_EQ(a.objective_estimate, b.objective_estimate);
}

TEST(Repair, NoOpWhenSatisfiedOrIdle)
{
    auto l = make_layout(1, 1, 4, 1e5);
    ChannelState ch(2, 4, 3.0); // 1e5 Hz * log2(4) * 1 ms = 200 bits per block
    PolicyDecision d{{1, 0, 0, 0}, 0.0, "dnn"};
    // One URLLC block carries 200 bits; lambda 0.5 -> 128 bits needed.
    auto r = priority_repair(d, make_snapshot(l, ch, 0.5), {}, l);
    EXPECT_EQ(r.decision.allocation, d.allocation);
    EXPECT_EQ(r.moved, 0u);
    EXPECT_FALSE(r.exhausted);

    auto zero = priority_repair(PolicyDecision{{0, 0, 0, 0}, 0.0, "dnn"}, make_snapshot(l, ch, 0.0), {}, l);
    EXPECT_EQ(zero.decision.allocation, AllocationMatrix(4, 0));
}

TEST(Repair, ExhaustionFlag)
{
    auto l = make_layout(1, 1, 3, 1e5);
    PolicyDecision d{{1, 1, 1}, 0.0, "dnn"};
    auto r = priority_repair(d, make_snapshot(l, ChannelState(2, 3, 1.0), 1000.0), {}, l);
    EXPECT_EQ(r.decision.allocation, d.allocation);
    EXPECT_TRUE(r.exhausted);
}

TEST(Repair, MovesStrongestBlocksUntilMet)
{
    auto l = make_layout(1, 1, 4, 1e5);
    ChannelState ch(2, 4, 1.0);
    ch.at(1, 2) = 15.0; // 400 bits for URLLC on block 2
    ch.at(1, 3) = 3.0;  // 200 bits on block 3
    PolicyDecision d{{0, 0, 0, 0}, 0.0, "dnn"};
    // 2 packets x 256 bits = 512 bits needed: blocks 2 then 3.
    auto r = priority_repair(d, make_snapshot(l, ch, 2.0), {}, l);
    EXPECT_EQ(r.decision.allocation, (AllocationMatrix{0, 0, 1, 1}));
    EXPECT_EQ(r.moved, 2u);
    EXPECT_FALSE(r.exhausted);
    EXPECT_EQ(r.decision.policy_id, "dnn+repair");
}

TEST(Repair, MonotoneOnRandomDecisions)
{
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> pick(-1, 4);
    std::uniform_real_distribution<double> lam(0.0, 60.0);
    auto l = make_layout(2, 3, 8, 1e5);
    for (int i = 0; i < 500; ++i) {
        AllocationMatrix m(8);
        for (auto& x : m) {
            x = pick(rng);
        }
        auto snap = make_snapshot(l, random_channel(rng, 5, 8), lam(rng));
        auto r = priority_repair({m, 0.0, "dnn"}, snap, {}, l);
        EXPECT_GE(predicted_urllc(r.decision.allocation, snap, l), predicted_urllc(m, snap, l));
        EXPECT_LE(slice_of(r.decision.allocation, l.users).embb, slice_of(m, l.users).embb);
        EXPECT_TRUE(validate_allocation(r.decision.allocation, l.grid, l.users));
        // URLLC-held blocks are never reassigned.
        for (std::size_t b = 0; b < 8; ++b) {
            if (m[b] >= 2) {
                EXPECT_EQ(r.decision.allocation[b], m[b]);
            }
        }
    }
}

TEST(PolicyId, RoundTrip)
{
    for (auto k : {PolicyKind::ORTHOGONAL, PolicyKind::ORACLE, PolicyKind::DNN, PolicyKind::DNN_REPAIR}) {
        EXPECT_EQ(parse_policy(policy_id(k)), k);
    }
    EXPECT_FALSE(parse_policy("random"));
}
