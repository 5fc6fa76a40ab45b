#include <gtest/gtest.h>

#include "chorus/recruiting.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace chorus;
using testing_support::error_of;
using testing_support::World;

TEST(Plan, DynamicDispatchesFirstThenPosts) {
    RecruitingConfig c;
    EXPECT_EQ(plan_recruitment(c, 0).dispatch, 0);
    EXPECT_EQ(plan_recruitment(c, 0).post, 10);
    EXPECT_EQ(plan_recruitment(c, 3).dispatch, 3);
    EXPECT_EQ(plan_recruitment(c, 3).post, 7);
    EXPECT_EQ(plan_recruitment(c, 12).dispatch, 10);
    EXPECT_EQ(plan_recruitment(c, 12).post, 0);
    c.platform_max_assignments = 4;
    EXPECT_EQ(plan_recruitment(c, 1).post, 4);
    c.policy = RecruitPolicy::Static;
    EXPECT_EQ(plan_recruitment(c, 12).dispatch, 0);
    EXPECT_EQ(plan_recruitment(c, 12).post, 4);
}

TEST(Transitions, OnlyTheStateMachineEdges) {
    using S = AssignmentState;
    const S all[] = {S::Unclaimed, S::Claimed, S::InConversation, S::InRetainer, S::Submitted, S::Expired};
    const std::set<std::pair<S, S>> legal = {
        {S::Unclaimed, S::Claimed},     {S::Unclaimed, S::Expired},        {S::Claimed, S::InConversation},
        {S::Claimed, S::InRetainer},    {S::InConversation, S::Submitted}, {S::InConversation, S::InRetainer},
        {S::InRetainer, S::InConversation}, {S::InRetainer, S::Expired},
    };
    for (S a : all)
        for (S b : all) EXPECT_EQ(is_legal_transition(a, b), legal.contains({a, b})) << to_string(a) << "->" << to_string(b);
    for (S a : all) EXPECT_EQ(assignment_state_from(to_string(a)), a);
}

TEST(RetainerPay, TenWorkersForADayCost115Dollars20) {
    const RecruitingConfig r;
    const FeeSchedule f;
    std::vector<RetainerInterval> h;
    for (int i = 0; i < 10; ++i) h.push_back({"w" + std::to_string(i), AssignmentId{1ull + i}, 0, 24 * kHour});
    const Cents owed = retainer_pay_owed(h, 0, 24 * kHour, r, f);
    EXPECT_EQ(owed, Cents{11520});
    EXPECT_EQ(owed.value, oracle::retainer_pay(240, 0.20, 0.5, 20));
    EXPECT_EQ(format_dollars(owed), "$115.20");
}

TEST(RetainerPay, ProRatedAndClippedToTheWindow) {
    const RecruitingConfig r;
    const FeeSchedule f;
    // 10 minutes inside the window, 5 of them before it, one interval still open.
    const std::vector<RetainerInterval> h = {{"a", AssignmentId{1}, -5 * kMinute, 10 * kMinute},
                                             {"b", AssignmentId{2}, 50 * kMinute, std::nullopt}};
    const Cents owed = retainer_pay_owed(h, 0, kHour, r, f);
    EXPECT_EQ(owed.value, oracle::retainer_pay(20.0 / 60, 0.20, 0.5, 20));
}

TEST(RetainerHistory, RebuiltFromEvents) {
    World w;
    const SessionId s = w.open("u1", "hi", 0);
    w.join(s, 2, kSecond);
    w.engine.tick(45 * kMinute);  // both enter the retainer
    const SessionId s2 = w.open("u2", "hello", 50 * kMinute);
    ASSERT_EQ(w.count(EventKind::RetainerPinged), 2);
    EXPECT_TRUE(w.engine.respond_to_ping("w1", 50 * kMinute + 10 * kSecond));
    const auto h = retainer_history(w.engine.log().entries());
    ASSERT_EQ(h.size(), 2u);
    EXPECT_EQ(h[0].worker_id, "w1");
    EXPECT_EQ(h[0].start, 45 * kMinute);
    EXPECT_EQ(h[0].end, 50 * kMinute + 10 * kSecond);
    EXPECT_FALSE(h[1].end.has_value());
    EXPECT_NE(w.engine.state().session(s2)->participant("w1"), nullptr);
}

TEST(Retainer, DynamicRecruitingPingsBeforePosting) {
    World w;
    const SessionId s = w.open("u1", "hi", 0);
    w.join(s, 3, kSecond);
    w.engine.tick(45 * kMinute);
    const SessionId s2 = w.open("u2", "hello", 46 * kMinute);
    const auto* hit = w.last(EventKind::HitPosted);
    EXPECT_EQ(hit->session_id, s2);
    EXPECT_EQ(hit->payload.at("n_assignments"), 7);
    EXPECT_EQ(hit->payload.at("dispatched"), 3);
    EXPECT_EQ(w.engine.state().retainer.pings.size(), 3u);
    EXPECT_EQ(w.engine.state().retainer.available(), 0);
}

TEST(Retainer, MissedPingsStrikeAndExpire) {
    World w;
    const SessionId s = w.open("u1", "hi", 0);
    w.join(s, 2, kSecond);
    w.engine.tick(45 * kMinute);
    w.open("u2", "hello", 46 * kMinute);
    // Nobody answers within 20 s: a strike each, and each ping passes to the other worker.
    w.engine.tick(46 * kMinute + 21 * kSecond);
    EXPECT_EQ(w.count(EventKind::RetainerPingMissed), 2);
    EXPECT_EQ(w.engine.state().retainer.find("w1")->strikes, 1);
    // A late answer does not join.
    EXPECT_FALSE(w.engine.respond_to_ping("w1", 46 * kMinute + 50 * kSecond));
    w.engine.tick(47 * kMinute + 30 * kSecond);
    EXPECT_EQ(w.engine.state().retainer.find("w1"), nullptr);  // second strike
    EXPECT_EQ(error_of([&] { w.engine.respond_to_ping("nobody", 48 * kMinute); }), ErrorCode::NoPendingPing);
    EXPECT_TRUE(w.violations().empty());
    EXPECT_TRUE(w.replay_matches());
}

TEST(Retainer, EntriesAndSlotsLapseAfterThirtyMinutes) {
    World w;
    const SessionId s = w.open("u1", "hi", 0);
    w.join(s, 1, kSecond);
    w.engine.tick(45 * kMinute);
    EXPECT_EQ(w.engine.state().retainer.waiting.size(), 1u);
    EXPECT_EQ(w.engine.state().retainer.slots.size(), 9u);
    w.engine.tick(75 * kMinute - 1);
    EXPECT_EQ(w.engine.state().retainer.waiting.size(), 1u);
    w.engine.tick(75 * kMinute);
    EXPECT_TRUE(w.engine.state().retainer.waiting.empty());
    EXPECT_TRUE(w.engine.state().retainer.slots.empty());
    EXPECT_EQ(w.platform.expired.size(), 10u);
}

TEST(Retainer, ClaimingASlotEntersTheRetainer) {
    World w;
    const SessionId s = w.open("u1", "hi", 0);
    w.engine.tick(45 * kMinute);
    const AssignmentId slot = w.engine.state().retainer.slots.begin()->first;
    const ClaimResult r = w.engine.claim_assignment(slot, "late", 50 * kMinute);
    EXPECT_EQ(r.outcome, ClaimOutcome::EnteredRetainer);
    EXPECT_EQ(w.engine.state().retainer.find("late")->expires_at, 75 * kMinute);
    (void)s;
}

TEST(Claims, Errors) {
    World w;
    const SessionId s = w.open();
    const auto crowd = w.join(s, 1, kSecond);
    const AssignmentId taken = w.engine.state().hits.begin()->second.assignments[0];
    const AssignmentId free = w.engine.state().hits.begin()->second.assignments[1];
    EXPECT_EQ(error_of([&] { w.engine.claim_assignment(taken, "x", 2 * kSecond); }), ErrorCode::AssignmentUnavailable);
    EXPECT_EQ(error_of([&] { w.engine.claim_assignment(free, crowd[0], 2 * kSecond); }), ErrorCode::WorkerBusy);
    EXPECT_EQ(error_of([&] { w.engine.claim_assignment(AssignmentId{999}, "x", 2 * kSecond); }),
              ErrorCode::UnknownAssignment);
}

TEST(Claims, PlatformOutageKeepsTheConversationOpen) {
    World w;
    w.platform.available = false;
    const IngestResult r = w.engine.handle_inbound_user_message("u", "hi", 0);
    EXPECT_EQ(r.status, IngestStatus::SessionOpened);
    EXPECT_TRUE(r.recruit_error.has_value());
    EXPECT_TRUE(w.engine.state().session(*r.session_id)->is_open());
    EXPECT_EQ(w.count(EventKind::HitPosted), 0);
    EXPECT_EQ(error_of([&] { w.engine.recruit_for_session(*r.session_id, 1); }), ErrorCode::PlatformUnavailable);
}

TEST(Static, PostsTheFullCrowdEveryTime) {
    Config c;
    c.recruiting.policy = RecruitPolicy::Static;
    World w(c);
    const SessionId s = w.open("u1", "hi", 0);
    w.join(s, 2, kSecond);
    w.engine.tick(45 * kMinute);
    w.open("u2", "hello", 46 * kMinute);
    EXPECT_EQ(w.last(EventKind::HitPosted)->payload.at("n_assignments"), 10);
    EXPECT_EQ(w.count(EventKind::RetainerPinged), 0);
}
