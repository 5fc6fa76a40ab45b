#include "chorus/engine.hpp"

namespace chorus {

namespace {
LoopbackPlatform& fallback_platform() {
    // Shared sink for engines constructed without an adapter; it records nothing that matters.
    static LoopbackPlatform instance;
    return instance;
}
}  // namespace

Engine::Engine(Config config, CrowdPlatformAdapter* platform) : config_(std::move(config)), platform_(platform) {
    config_.validate();
    if (platform_ == nullptr) platform_ = &fallback_platform();
}

Engine Engine::restore(Config config, EventLog log, CrowdPlatformAdapter* platform) {
    Engine engine(std::move(config), platform);
    engine.state_ = replay(log.entries());
    engine.log_ = std::move(log);
    return engine;
}

void Engine::emit(TimeMs at, EventKind kind, std::optional<SessionId> session, json payload) {
    const EventLogEntry& entry = log_.append(at, kind, session, std::move(payload));
    apply(state_, entry);
    if (sink_) sink_(log_.back());
}

void Engine::advance_clock(TimeMs now) {
    if (now < state_.last_at)
        throw Error(ErrorCode::ClockWentBackwards,
                    std::to_string(now) + " < last event at " + std::to_string(state_.last_at));
}

const SessionRecord& Engine::session_or_throw(SessionId session) const {
    const SessionRecord* s = state_.session(session);
    if (s == nullptr) throw Error(ErrorCode::UnknownSession, "session " + std::to_string(session.value));
    return *s;
}

const SessionRecord& Engine::open_session_or_throw(SessionId session) const {
    const SessionRecord& s = session_or_throw(session);
    if (!s.is_open()) throw Error(ErrorCode::SessionClosed, "session " + std::to_string(session.value));
    return s;
}

const Participant& Engine::present_participant_or_throw(const SessionRecord& s, const WorkerId& worker) const {
    const Participant* p = s.participant(worker);
    if (p == nullptr || !p->present())
        throw Error(ErrorCode::NotAParticipant,
                    "worker " + worker + " is not active in session " + std::to_string(s.session_id.value));
    return *p;
}

std::string_view to_string(IngestStatus s) {
    switch (s) {
        case IngestStatus::Routed: return "routed";
        case IngestStatus::SessionOpened: return "session_opened";
        case IngestStatus::Dropped: return "dropped";
    }
    return "unknown";
}

void to_json(json& j, const IngestResult& r) {
    j = json{{"status", to_string(r.status)},
             {"session_id", r.session_id ? json(r.session_id->value) : json(nullptr)},
             {"message_id", r.message_id ? json(r.message_id->value) : json(nullptr)},
             {"auto_replies", r.auto_replies}};
    if (r.recruit_error) j["recruit_error"] = *r.recruit_error;
}

void to_json(json& j, const SubmissionResult& r) {
    j = json{{"session_id", r.session_id},
             {"worker_id", r.worker_id},
             {"voluntary_submissions", r.voluntary_submissions},
             {"session_closed", r.session_closed},
             {"force_submitted", r.force_submitted}};
}

void to_json(json& j, const DeliveryReceipt& r) {
    j = json{{"message_id", r.message_id}, {"user_id", r.user_id}, {"body", r.body}, {"delivered_at", r.delivered_at}};
}

}  // namespace chorus
