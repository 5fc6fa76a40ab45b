#include <gtest/gtest.h>

#include "chorus/incentives.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace chorus;
using testing_support::World;

TEST(Points, DefaultSchedule) {
    const IncentiveConfig c;
    EXPECT_EQ(points_for(c, Action::Propose), 2);
    EXPECT_EQ(points_for(c, Action::Vote), 1);
    EXPECT_EQ(points_for(c, Action::ProposalAccepted), 5);
    EXPECT_EQ(points_for(c, Action::PostFact), 2);
    EXPECT_EQ(points_for(c, Action::Waiting), 1);
    EXPECT_EQ(c.min_points_to_submit, 40);
    for (auto a : {Action::Propose, Action::Vote, Action::ProposalAccepted, Action::PostFact, Action::Waiting})
        EXPECT_EQ(action_from(to_string(a)), a);
}

TEST(Points, WholeIntervalsOnly) {
    EXPECT_EQ(whole_intervals(0, 30 * kSecond), 0);
    EXPECT_EQ(whole_intervals(30 * kSecond - 1, 30 * kSecond), 0);
    EXPECT_EQ(whole_intervals(30 * kSecond, 30 * kSecond), 1);
    EXPECT_EQ(whole_intervals(95 * kSecond, 30 * kSecond), 3);
    EXPECT_EQ(whole_intervals(-5, 30 * kSecond), 0);
}

TEST(Bonus, HalfCentPerPointMatchesOracle) {
    const MicroDollars rate{5'000};
    for (std::int64_t p = 0; p <= 2000; ++p) EXPECT_EQ(bonus_for_points(p, rate).value, oracle::bonus_half_cent(p));
    EXPECT_EQ(bonus_for_points(40, rate), Cents{20});
    EXPECT_EQ(bonus_for_points(1, rate), Cents{1});  // half a cent rounds up
    EXPECT_EQ(bonus_for_points(100, MicroDollars{10'000}), Cents{100});
}

TEST(Ledger, AddKeepsTheTotal) {
    PointsLedger l;
    l.add(Action::Propose, 2, 10);
    l.add(Action::Waiting, 3, 20);
    EXPECT_EQ(l.total, 5);
    EXPECT_EQ(l.entries.size(), 2u);
}

TEST(Waiting, AccruesOnlyWhilePresent) {
    World w;
    const SessionId s = w.open();
    const auto crowd = w.join(s, 2, 0);
    // crowd[0] keeps a heartbeat; crowd[1] never does after joining.
    for (TimeMs t = 20 * kSecond; t <= 120 * kSecond; t += 20 * kSecond) w.engine.heartbeat(s, crowd[0], t);
    w.engine.accrue_waiting(s, 120 * kSecond);
    EXPECT_EQ(w.engine.state().points(s, crowd[0]), 4);  // 120 s / 30 s
    EXPECT_EQ(w.engine.state().points(s, crowd[1]), 0);
    // Accruing again at the same instant credits nothing new.
    EXPECT_TRUE(w.engine.accrue_waiting(s, 120 * kSecond).empty());
    w.engine.heartbeat(s, crowd[0], 140 * kSecond);
    w.engine.accrue_waiting(s, 149 * kSecond);
    EXPECT_EQ(w.engine.state().points(s, crowd[0]), 4);
    w.engine.accrue_waiting(s, 150 * kSecond);
    EXPECT_EQ(w.engine.state().points(s, crowd[0]), 5);
}

TEST(Waiting, ALapsedWorkerRestartsTheInterval) {
    World w;
    const SessionId s = w.open();
    const auto crowd = w.join(s, 1, 0);
    // Away from 0 to 100 s: that time earns nothing.
    w.engine.heartbeat(s, crowd[0], 100 * kSecond);
    w.engine.accrue_waiting(s, 125 * kSecond);
    EXPECT_EQ(w.engine.state().points(s, crowd[0]), 0);
    w.engine.heartbeat(s, crowd[0], 125 * kSecond);
    w.engine.accrue_waiting(s, 130 * kSecond);
    EXPECT_EQ(w.engine.state().points(s, crowd[0]), 1);
    EXPECT_TRUE(w.violations().empty());
}

TEST(Actions, EachActionIsCredited) {
    World w;
    const SessionId s = w.open();
    const auto crowd = w.join(s, 5, 0);
    const ChatMessage m = w.engine.propose_message(s, crowd[0], "answer", kSecond);
    w.engine.vote_message(s, crowd[1], m.message_id, 2 * kSecond);
    w.engine.post_fact(s, crowd[2], "user is in Paris", 3 * kSecond);
    EXPECT_EQ(w.engine.state().points(s, crowd[0]), 7);
    EXPECT_EQ(w.engine.state().points(s, crowd[1]), 1);
    EXPECT_EQ(w.engine.state().points(s, crowd[2]), 2);
    EXPECT_FALSE(w.engine.eligible_to_submit(s, crowd[0]));
    w.engine.award_action(s, crowd[0], Action::ProposalAccepted, 4 * kSecond);
    const PointsLedger* l = w.engine.state().ledger(s, crowd[0]);
    ASSERT_NE(l, nullptr);
    EXPECT_EQ(l->total, 12);
    EXPECT_EQ(l->entries.size(), 3u);
}

TEST(Settlement, BonusesMatchPointsAndAreNeverPaidTwice) {
    World w;
    const SessionId s = w.open();
    const auto crowd = w.join(s, 3, 0);
    const ChatMessage m = w.engine.propose_message(s, crowd[0], "answer", kSecond);
    w.engine.vote_message(s, crowd[1], m.message_id, 2 * kSecond);
    w.engine.tick(45 * kMinute);
    const auto& settled = w.engine.state().settlements.at(s);
    for (const auto& worker : crowd)
        EXPECT_EQ(settled.at(worker).value, oracle::bonus_half_cent(w.engine.state().points(s, worker)));
    const std::size_t paid = w.platform.bonuses.size();
    w.engine.settle_bonus(s, 46 * kMinute);
    EXPECT_EQ(w.platform.bonuses.size(), paid);
    EXPECT_TRUE(w.violations().empty());
}
