#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chorus/analytics.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace chorus;
using testing_support::error_of;
using testing_support::World;

namespace {

// A log of `n` ten-assignment HITs at 20 cents, one per day-spread session.
EventLog hits_log(int n, TimeMs span) {
    EventLog log;
    for (int i = 0; i < n; ++i) {
        json ids = json::array();
        for (int k = 0; k < 10; ++k) ids.push_back(i * 10 + k + 1);
        log.append(n > 1 ? span * i / (n - 1) : 0, EventKind::HitPosted, SessionId{static_cast<std::uint64_t>(i + 1)},
                   json{{"hit_id", i + 1}, {"n_assignments", 10}, {"assignment_ids", ids}, {"base_pay_cents", 20}});
    }
    return log;
}

const WorkerQuality& quality_of(const std::vector<WorkerQuality>& qs, const WorkerId& w) {
    for (const auto& q : qs)
        if (q.worker_id == w) return q;
    throw std::runtime_error("no worker " + w);
}

}  // namespace

TEST(Cost, TenAssignmentHitCosts2Dollars80) {
    const Cents c = hit_base_cost(10, Cents{20});
    EXPECT_EQ(c, Cents{280});
    EXPECT_EQ(format_dollars(c), "$2.80");
    EXPECT_EQ(c.value, oracle::hit_cost(10, oracle::cents("0.20"), 40));
}

TEST(Cost, FeeTierSwitchesAtTenAssignments) {
    const FeeSchedule f;
    for (int n = 0; n <= 120; ++n)
        for (std::int64_t pay : {1, 7, 20, 33, 125})
            EXPECT_EQ(hit_base_cost(n, Cents{pay}, f).value, oracle::hit_cost(n, pay, n >= 10 ? 40 : 20))
                << n << " x " << pay;
    EXPECT_EQ(hit_base_cost(9, Cents{20}), Cents{216});
    EXPECT_EQ(hit_base_cost(0, Cents{20}), Cents{0});
    EXPECT_EQ(error_of([] { hit_base_cost(-1, Cents{20}); }), ErrorCode::NegativeAssignments);
}

TEST(Cost, ThreeHundredTwentySessionsCost896AndPerDayRoundsHalfUp) {
    const EventLog log = hits_log(320, 30 * 24 * kHour);
    const CostReport r = deployment_cost_summary(log.entries(), 31);
    EXPECT_EQ(r.per_hit.size(), 320u);
    EXPECT_EQ(r.base_cost, Cents{89600});
    EXPECT_EQ(format_dollars(r.base_cost), "$896.00");
    EXPECT_EQ(r.base, Cents{64000});
    EXPECT_EQ(r.per_day, Cents{2890});
    EXPECT_EQ(r.per_day.value, oracle::per_day(89600, 31));
    EXPECT_EQ(format_dollars(r.per_day), "$28.90");
    EXPECT_EQ(r.grand, r.base_cost);  // no bonuses settled
    EXPECT_EQ(r.retainer, Cents{0});
}

TEST(Cost, PeriodDerivedFromTheLogSpan) {
    const EventLog log = hits_log(3, 2 * 24 * kHour + 1);
    EXPECT_EQ(deployment_cost_summary(log.entries(), 0).period_days, 3);
    EXPECT_EQ(deployment_cost_summary(EventLog{}.entries(), 0).per_day, Cents{0});
}

TEST(Cost, PerDayRoundingAgainstOracle) {
    for (std::int64_t total : {0, 1, 15, 31, 46, 89600, 89601, 123457})
        for (int days : {1, 2, 3, 7, 30, 31})
            EXPECT_EQ(div_round_half_up(total, days), oracle::per_day(total, days)) << total << "/" << days;
}

TEST(Cost, BonusesAndCommissionAttachToTheirSession) {
    World w;
    const SessionId s = w.open();
    const auto crowd = w.join(s, 2, 0);
    w.engine.propose_message(s, crowd[0], "hi", kSecond);  // 7 points
    w.engine.tick(45 * kMinute);
    const CostReport r = deployment_cost_summary(w.engine.log().entries(), 1, w.config);
    ASSERT_EQ(r.per_hit.size(), 1u);
    const HitCost& h = r.per_hit[0];
    EXPECT_EQ(h.bonus.value, oracle::bonus_half_cent(w.engine.state().points(s, crowd[0])) +
                                 oracle::bonus_half_cent(w.engine.state().points(s, crowd[1])));
    EXPECT_EQ(h.fee.value, 80 + (h.bonus.value * 20 + 50) / 100);
    EXPECT_EQ(h.total, h.base + h.fee + h.bonus);
    EXPECT_EQ(r.overall, r.grand + r.retainer);
}

TEST(Sessions, FiguresFromALiveConversation) {
    World w;
    const SessionId s = w.open("u", "hi", 0);
    const auto crowd = w.join(s, 5, kSecond);
    // All five stay active, so every proposal needs two votes.
    const ChatMessage a = w.engine.propose_message(s, crowd[0], "hello", 10 * kSecond);
    w.engine.vote_message(s, crowd[1], a.message_id, 20 * kSecond);
    w.engine.propose_message(s, crowd[2], "ignored", 25 * kSecond);
    w.engine.handle_inbound_user_message("u", "thanks", 3 * kMinute);
    w.engine.tick(30 * kMinute);
    const auto figs = session_figures(w.engine.log().entries());
    ASSERT_EQ(figs.size(), 1u);
    EXPECT_EQ(figs[0].user_messages, 2);
    EXPECT_EQ(figs[0].crowd_messages, 1);
    EXPECT_EQ(figs[0].rejected, 1);
    EXPECT_EQ(figs[0].first_response, 20 * kSecond);
    EXPECT_EQ(figs[0].duration, 3 * kMinute);
    const SessionStats st = session_statistics(w.engine.log().entries());
    EXPECT_DOUBLE_EQ(st.messages_mean, 3);
    EXPECT_DOUBLE_EQ(st.duration_mean, 3);
    EXPECT_DOUBLE_EQ(st.within_30s, 1);
    EXPECT_EQ(st.first_response_quantiles.at(50), 20);
}

TEST(Sessions, NearestRankMatchesOracle) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 300);
    for (int n : {1, 2, 3, 10, 99, 240}) {
        std::vector<double> xs(n);
        for (double& x : xs) x = std::round(u(rng));
        for (double p : {1.0, 10.0, 25.0, 50.0, 60.0, 88.3, 99.0, 100.0})
            EXPECT_EQ(nearest_rank(xs, p), oracle::nearest_rank(xs, p)) << n << " p" << p;
    }
    EXPECT_EQ(nearest_rank({5, 1, 3, 2, 4}, 40), 2);
}

TEST(Quality, EditDistanceMatchesOracle) {
    const std::vector<std::string> words = {"", "a", "d", "kitten", "sitting", "flaw", "lawn", "user likes tea",
                                            "user likes coffee"};
    for (const auto& a : words)
        for (const auto& b : words) {
            const double expected =
                a.empty() && b.empty() ? 0.0 : double(oracle::levenshtein(a, b)) / std::max(a.size(), b.size());
            EXPECT_DOUBLE_EQ(normalized_edit_distance(a, b), expected) << a << "|" << b;
        }
}

TEST(Quality, FiftyAsAndThirtyDsAreFlaggedAsFactSpam) {
    EventLog log;
    const SessionId s{1};
    log.append(0, EventKind::SessionOpened, s, json{{"user_id", "u"}});
    log.append(1, EventKind::AssignmentClaimed, s,
               json{{"assignment_id", 1}, {"worker_id", "x"}, {"joins", "conversation"}});
    log.append(1, EventKind::AssignmentClaimed, s,
               json{{"assignment_id", 2}, {"worker_id", "honest"}, {"joins", "conversation"}});
    std::uint64_t fid = 1;
    for (int i = 0; i < 50; ++i) log.append(2 + i, EventKind::FactPosted, s, json{{"fact_id", fid++}, {"worker_id", "x"}, {"body", "a"}});
    for (int i = 0; i < 30; ++i) log.append(60 + i, EventKind::FactPosted, s, json{{"fact_id", fid++}, {"worker_id", "x"}, {"body", "d"}});
    const std::vector<std::string> honest = {"lives in Boston",  "has two cats",      "allergic to peanuts",
                                             "works nights",     "likes jazz",        "birthday in May",
                                             "vegetarian",       "owns a bicycle",    "learning Spanish",
                                             "moving in August", "budget under $500", "prefers email"};
    for (const auto& f : honest)
        log.append(100, EventKind::FactPosted, s, json{{"fact_id", fid++}, {"worker_id", "honest"}, {"body", f}});

    const auto qs = worker_quality(log.entries());
    const WorkerQuality& x = quality_of(qs, "x");
    EXPECT_EQ(x.fact_posts, 80);
    EXPECT_DOUBLE_EQ(x.fact_spam_score, 1.0);
    EXPECT_DOUBLE_EQ(x.median_fact_length, 1.0);
    EXPECT_TRUE(x.flags.contains(QualityFlag::FactSpammer));
    EXPECT_TRUE(quality_of(qs, "honest").flags.empty());
}

TEST(Quality, LowAcceptanceFlagsAMessageSpammer) {
    Config c;
    World w(c);
    const SessionId s = w.open();
    const auto crowd = w.join(s, 5, 0);
    for (int i = 0; i < 12; ++i) {
        w.engine.heartbeat(s, crowd[1], (i + 1) * 20 * kSecond);
        w.engine.heartbeat(s, crowd[2], (i + 1) * 20 * kSecond);
        w.engine.propose_message(s, crowd[0], "ok " + std::to_string(i), (i + 1) * 20 * kSecond);
    }
    const auto qs = worker_quality(w.engine.log().entries());
    const WorkerQuality& q = quality_of(qs, crowd[0]);
    EXPECT_EQ(q.proposals, 12);
    EXPECT_EQ(q.accepted, 0);
    EXPECT_TRUE(q.flags.contains(QualityFlag::MessageSpammer));
}
