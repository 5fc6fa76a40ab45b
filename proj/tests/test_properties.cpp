// Random command sequences against the engine. Commands may be rejected; whatever
// is accepted must leave a log that replays to the live state and breaks no rule.
#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"

using namespace chorus;
using testing_support::World;

namespace {

template <typename T>
const T& pick(const std::vector<T>& xs, std::mt19937_64& rng) {
    return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

struct Driver {
    explicit Driver(std::uint64_t seed, Config c = {}) : rng(seed), w(std::move(c)) {}

    std::mt19937_64 rng;
    World w;
    TimeMs now = 0;
    int rejected = 0;
    const std::vector<UserId> users = {"u1", "u2", "u3"};
    const std::vector<WorkerId> workers = {"a", "b", "c", "d", "e", "f", "g", "h"};

    std::vector<SessionId> open_sessions() const {
        std::vector<SessionId> out;
        for (const auto& [u, s] : w.engine.state().open_session_by_user) out.push_back(s);
        return out;
    }

    void step() {
        now += std::uniform_int_distribution<TimeMs>(0, 40 * kSecond)(rng);
        if (std::bernoulli_distribution(0.01)(rng)) now += 20 * kMinute;
        const auto open = open_sessions();
        const auto& e = w.engine;
        try {
            switch (std::uniform_int_distribution<int>(0, 11)(rng)) {
                case 0: w.engine.handle_inbound_user_message(pick(users, rng), "msg", now); break;
                case 1: {
                    std::vector<AssignmentId> free;
                    for (const auto& [id, a] : e.state().assignments)
                        if (a.state == AssignmentState::Unclaimed) free.push_back(id);
                    if (!free.empty()) w.engine.claim_assignment(pick(free, rng), pick(workers, rng), now);
                    break;
                }
                case 2:
                    if (!open.empty()) w.engine.propose_message(pick(open, rng), pick(workers, rng), "reply", now);
                    break;
                case 3: {
                    std::vector<std::pair<SessionId, MessageId>> pending;
                    for (const auto& [id, m] : e.state().messages)
                        if (m.status == MessageStatus::Pending && m.kind == MessageKind::WorkerProposal)
                            pending.emplace_back(m.session_id, id);
                    if (!pending.empty()) {
                        const auto [s, m] = pick(pending, rng);
                        w.engine.vote_message(s, pick(workers, rng), m, now);
                    }
                    break;
                }
                case 4:
                    if (!open.empty()) w.engine.post_fact(pick(open, rng), pick(workers, rng), "fact", now);
                    break;
                case 5:
                    if (!open.empty()) w.engine.heartbeat(pick(open, rng), pick(workers, rng), now);
                    break;
                case 6:
                    if (!open.empty()) w.engine.submit_hit(pick(open, rng), pick(workers, rng), now);
                    break;
                case 7: w.engine.tick(now); break;
                case 8:
                    if (std::bernoulli_distribution(0.2)(rng))
                        w.engine.block_user(pick(users, rng), "x", w.config.gateway.admin_token, now);
                    else
                        w.engine.unblock_user(pick(users, rng), w.config.gateway.admin_token, now);
                    break;
                case 9: w.engine.respond_to_ping(pick(workers, rng), now); break;
                case 10:
                    if (!open.empty()) w.engine.accrue_waiting(pick(open, rng), now);
                    break;
                case 11:
                    if (!open.empty()) w.engine.file_report(pick(workers, rng), pick(open, rng), {1}, {}, "", now);
                    break;
            }
        } catch (const Error&) {
            ++rejected;
        }
    }
};

}  // namespace

TEST(Properties, RandomCommandsKeepEveryInvariant) {
    for (std::uint64_t seed = 1; seed <= 120; ++seed) {
        Config c;
        c.incentives.min_points_to_submit = 6;  // let voluntary submissions happen
        c.recruiting.target_crowd_size = 1 + static_cast<int>(seed % 6);
        Driver d(seed, c);
        for (int i = 0; i < 300; ++i) d.step();
        d.w.engine.tick(d.now + 2 * kHour);
        const auto v = d.w.violations();
        EXPECT_TRUE(v.empty()) << "seed " << seed << ": " << (v.empty() ? "" : v.front());
        EXPECT_TRUE(d.w.replay_matches()) << "seed " << seed;
    }
}

TEST(Properties, RestoredEngineContinuesIdentically) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Driver a(seed);
        for (int i = 0; i < 150; ++i) a.step();
        // Round-trip the log through JSONL and continue from it.
        std::stringstream io;
        a.w.engine.log().write_jsonl(io);
        const EventLog loaded = EventLog::read_jsonl(io);
        ASSERT_EQ(loaded, a.w.engine.log());
        LoopbackPlatform p;
        Engine b = Engine::restore(a.w.config, loaded, &p);
        EXPECT_EQ(b.state(), a.w.engine.state());
        const TimeMs later = a.now + kHour;
        a.w.engine.tick(later);
        b.tick(later);
        EXPECT_EQ(b.log(), a.w.engine.log()) << "seed " << seed;
    }
}

TEST(Properties, AcceptedMessagesAlwaysMetTheThresholdAndWereDeliveredOnce) {
    for (std::uint64_t seed = 200; seed < 260; ++seed) {
        Driver d(seed);
        for (int i = 0; i < 250; ++i) d.step();
        std::map<std::uint64_t, int> deliveries;
        for (const auto& e : d.w.engine.log().entries()) {
            if (e.kind == EventKind::MessageAccepted) {
                EXPECT_GE(e.payload.at("votes").get<int>(), e.payload.at("threshold").get<int>());
                EXPECT_EQ(e.payload.at("threshold").get<int>(),
                          acceptance_threshold(e.payload.at("active_count").get<int>()));
            }
            if (e.kind == EventKind::MessageDelivered) ++deliveries[e.payload.at("message_id").get<std::uint64_t>()];
        }
        for (const auto& [id, m] : d.w.engine.state().messages)
            if (m.kind == MessageKind::WorkerProposal && m.status == MessageStatus::Accepted) EXPECT_EQ(deliveries[id.value], 1) << "seed " << seed;
    }
}

TEST(Properties, NoWorkerServesTwoConversations) {
    for (std::uint64_t seed = 300; seed < 340; ++seed) {
        Driver d(seed);
        for (int i = 0; i < 250; ++i) {
            d.step();
            std::map<WorkerId, int> seen;
            for (const auto& [id, s] : d.w.engine.state().sessions)
                if (s.is_open())
                    for (const auto& p : s.participants)
                        if (p.present()) EXPECT_EQ(++seen[p.worker_id], 1) << "seed " << seed;
        }
    }
}
