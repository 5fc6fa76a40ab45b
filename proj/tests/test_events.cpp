#include <gtest/gtest.h>

#include <sstream>

#include "chorus/events.hpp"
#include "chorus/state.hpp"

using namespace chorus;

namespace {
EventLog sample() {
    EventLog log;
    log.append(1000, EventKind::SessionOpened, SessionId{1},
               {{"user_id", "u"}, {"handshake_timeout_ms", 2700000}, {"idle_timeout_ms", 900000}, {"new_user", true}});
    log.append(1000, EventKind::UserMessage, SessionId{1},
               {{"user_id", "u"}, {"body", "héllo \"quoted\""}, {"message_id", 1}, {"dropped", false}});
    log.append(2000, EventKind::UserBlocked, std::nullopt, {{"user_id", "u"}, {"reason", "x"}});
    return log;
}
}  // namespace

TEST(EventLog, SequenceStartsAtOneAndIsContiguous) {
    const EventLog log = sample();
    ASSERT_EQ(log.size(), 3u);
    for (std::size_t i = 0; i < log.size(); ++i) EXPECT_EQ(log.entries()[i].seq, i + 1);
    EXPECT_EQ(log.last_seq(), 3u);
    EXPECT_EQ(log.since(1).size(), 2u);
    EXPECT_EQ(log.since(3).size(), 0u);
    EXPECT_EQ(log.since(99).size(), 0u);
}

TEST(EventLog, JsonlRoundTripIsExact) {
    const EventLog log = sample();
    const std::string text = log.to_jsonl();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    std::istringstream in(text);
    const EventLog back = EventLog::read_jsonl(in);
    EXPECT_EQ(back, log);
    EXPECT_EQ(back.to_jsonl(), text);
}

TEST(EventLog, LineHasExactlyTheEntryFields) {
    const json j = json::parse(to_jsonl_line(sample().entries()[2]));
    std::set<std::string> keys;
    for (auto& [k, v] : j.items()) keys.insert(k);
    EXPECT_EQ(keys, (std::set<std::string>{"seq", "at", "session_id", "kind", "payload"}));
    EXPECT_TRUE(j.at("session_id").is_null());
    EXPECT_EQ(j.at("kind"), "UserBlocked");
}

TEST(EventLog, GapOrDecreasingSeqIsCorrupt) {
    std::string text = sample().to_jsonl();
    const auto second_line = text.find('\n') + 1;
    const auto third_line = text.find('\n', second_line) + 1;
    const std::string gap = text.substr(0, second_line) + text.substr(third_line);
    std::istringstream in(gap);
    try {
        EventLog::read_jsonl(in);
        FAIL() << "gap accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CorruptLog);
    }
    std::istringstream garbage("{\"seq\": 1, \"kind\": \"NoSuchKind\", \"at\": 0, \"session_id\": null, \"payload\": {}}\n");
    EXPECT_THROW(EventLog::read_jsonl(garbage), Error);
    std::istringstream not_json("seq=1\n");
    EXPECT_THROW(EventLog::read_jsonl(not_json), Error);
}

TEST(EventLog, EveryKindNameRoundTrips) {
    for (int k = 0; k <= static_cast<int>(EventKind::ReportFiled); ++k) {
        const auto kind = static_cast<EventKind>(k);
        EXPECT_EQ(event_kind_from(to_string(kind)), kind);
    }
    EXPECT_THROW(event_kind_from("Bogus"), Error);
}

TEST(Replay, EmptyLogGivesEmptyState) {
    const SystemState s = replay({});
    EXPECT_EQ(s, SystemState{});
}

TEST(Replay, GapIsCorrupt) {
    EventLog log = sample();
    std::vector<EventLogEntry> entries(log.entries().begin(), log.entries().end());
    entries.erase(entries.begin() + 1);
    try {
        replay(entries);
        FAIL() << "gap accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CorruptLog);
    }
}
