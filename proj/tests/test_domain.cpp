#include <gtest/gtest.h>

#include <random>

#include "ntn/domain.hpp"
#include "test_support.hpp"

using namespace ntn;
using ntn::testing::make_layout;

TEST(Allocation, ValidWithIdleBlock)
{
    auto l = make_layout(1, 1, 3);
    EXPECT_TRUE(validate_allocation({0, 1, kUnassigned}, l.grid, l.users));
}

TEST(Allocation, UnknownUserReported)
{
    auto l = make_layout(1, 0, 1);
    auto v = validate_allocation({9}, l.grid, l.users);
    EXPECT_FALSE(v);
    EXPECT_FALSE(v.length_mismatch);
    EXPECT_EQ(v.index, 0u);
    EXPECT_EQ(v.offending, 9);
}

TEST(Allocation, LengthMismatch)
{
    auto l = make_layout(1, 1, 3);
    auto v = validate_allocation({0, 1}, l.grid, l.users);
    EXPECT_FALSE(v);
    EXPECT_TRUE(v.length_mismatch);
}

TEST(Allocation, NegativeIdOtherThanIdleRejected)
{
    auto l = make_layout(1, 1, 2);
    EXPECT_FALSE(validate_allocation({0, -2}, l.grid, l.users));
}

TEST(SliceOf, CountsPerClass)
{
    auto l = make_layout(1, 1, 3);
    EXPECT_EQ(slice_of({0, 1, 0}, l.users), (SliceCounts{2, 1, 0}));
    EXPECT_EQ(slice_of(AllocationMatrix(4, kUnassigned), l.users), (SliceCounts{0, 0, 4}));
}

TEST(SliceOf, CountsAlwaysSumToBlocks)
{
    auto l = make_layout(3, 2, 12);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(-1, 4);
    for (int i = 0; i < 1000; ++i) {
        AllocationMatrix m(12);
        for (auto& x : m) {
            x = pick(rng);
        }
        auto c = slice_of(m, l.users);
        EXPECT_EQ(c.embb + c.urllc + c.unassigned, 12u);
    }
}

TEST(ResourceGrid, BandwidthIsProduct)
{
    ResourceGrid g(50, 1e6);
    EXPECT_EQ(g.system_bandwidth(), 50 * 1e6);
    EXPECT_THROW(ResourceGrid(0, 1e6), std::invalid_argument);
    EXPECT_THROW(ResourceGrid(4, 0.0), std::invalid_argument);
}

TEST(QoS, ThresholdRange)
{
    QoSRequirement q;
    EXPECT_NO_THROW(q.validate());
    q.urllc_outage_threshold = 1.5;
    EXPECT_THROW(q.validate(), std::invalid_argument);
    q = {};
    q.urllc_packet_size = 0.0;
    EXPECT_THROW(q.validate(), std::invalid_argument);
}

TEST(Users, IdsMustBeDense)
{
    auto l = make_layout(2, 1, 2);
    EXPECT_NO_THROW(check_user_ids(l.users));
    l.users[1].id = 5;
    EXPECT_THROW(check_user_ids(l.users), std::invalid_argument);
}

TEST(ChannelState, Validity)
{
    ChannelState ch(2, 3, 1.0);
    EXPECT_TRUE(ch.is_valid());
    ch.at(1, 2) = -0.1;
    EXPECT_FALSE(ch.is_valid());
}
