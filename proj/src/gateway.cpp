#include "chorus/engine.hpp"

namespace chorus {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string Engine::choose_reply(const std::vector<std::string>& pool, std::uint64_t salt) const {
    return pool[splitmix64(config_.gateway.rng_seed ^ salt) % pool.size()];
}

IngestResult Engine::handle_inbound_user_message(const UserId& user, const std::string& body, TimeMs now) {
    advance_clock(now);
    tick(now);
    if (trim(body).empty()) throw Error(ErrorCode::EmptyBody, "message body is empty");

    IngestResult result;
    if (const auto it = state_.users.find(user); it != state_.users.end() && it->second.blocked) {
        // Kept in the log for audit, never shown to workers.
        emit(now, EventKind::UserMessage, std::nullopt, json{{"user_id", user}, {"body", body}, {"dropped", true}});
        result.status = IngestStatus::Dropped;
        return result;
    }
    if (const auto it = state_.open_session_by_user.find(user); it != state_.open_session_by_user.end()) {
        result.status = IngestStatus::Routed;
        ingest_into_session(it->second, user, body, now, &result);
        return result;
    }
    result.status = IngestStatus::SessionOpened;
    open_session_unchecked(user, body, now, &result);
    return result;
}

void Engine::ingest_into_session(SessionId session, const UserId& user, const std::string& body, TimeMs now,
                                 IngestResult* result) {
    const MessageId mid{state_.next_message};
    emit(now, EventKind::UserMessage, session,
         json{{"user_id", user}, {"body", body}, {"message_id", mid}, {"dropped", false}});
    if (result != nullptr) {
        result->session_id = session;
        result->message_id = mid;
    }
}

SessionRecord Engine::open_session_unchecked(const UserId& user, const std::string& body, TimeMs now,
                                             IngestResult* result) {
    const SessionId session{state_.next_session};
    const bool new_user = !state_.users.contains(user);
    emit(now, EventKind::SessionOpened, session,
         json{{"user_id", user},
              {"handshake_timeout_ms", config_.session.handshake_timeout},
              {"idle_timeout_ms", config_.session.idle_timeout},
              {"new_user", new_user}});
    ingest_into_session(session, user, body, now, result);

    std::vector<std::string> replies;
    if (new_user) replies.push_back(choose_reply(config_.gateway.welcome_messages, log_.last_seq() + 1));
    replies.push_back(choose_reply(config_.gateway.wait_messages, log_.last_seq() + 1 + replies.size()));
    for (std::size_t i = 0; i < replies.size(); ++i)
        emit(now, EventKind::AutoReplySent, session,
             json{{"user_id", user}, {"body", replies[i]}, {"purpose", new_user && i == 0 ? "welcome" : "wait"}});
    if (result != nullptr) result->auto_replies = replies;

    try {
        recruit_for_session(session, now);
    } catch (const Error& e) {
        // The conversation stays open; the retainer or a later retry can still staff it.
        if (e.code() != ErrorCode::PlatformUnavailable) throw;
        if (result != nullptr) result->recruit_error = e.what();
    }
    return *state_.session(session);
}

DeliveryReceipt Engine::deliver_accepted_message(MessageId message, TimeMs now) {
    advance_clock(now);
    const ChatMessage* m = state_.message(message);
    if (m == nullptr) throw Error(ErrorCode::UnknownMessage, "message " + std::to_string(message.value));
    if (m->kind != MessageKind::WorkerProposal || m->status != MessageStatus::Accepted)
        throw Error(ErrorCode::NotAccepted, "message " + std::to_string(message.value));
    if (state_.deliveries.contains(message))
        throw Error(ErrorCode::AlreadyDelivered, "message " + std::to_string(message.value));

    const UserId user = session_or_throw(m->session_id).user_id;
    emit(now, EventKind::MessageDelivered, m->session_id, json{{"message_id", message}, {"user_id", user}});
    DeliveryReceipt receipt{message, user, state_.message(message)->body, now};
    if (delivery_sink_) delivery_sink_(receipt);
    return receipt;
}

UserAccount Engine::block_user(const UserId& user, const std::string& reason, const std::string& admin_token,
                               TimeMs now) {
    if (admin_token != config_.gateway.admin_token) throw Error(ErrorCode::Unauthorized, "bad admin token");
    advance_clock(now);
    tick(now);
    const auto it = state_.users.find(user);
    if (it == state_.users.end()) throw Error(ErrorCode::UnknownUser, user);
    if (it->second.blocked) return it->second;

    if (const auto open = state_.open_session_by_user.find(user); open != state_.open_session_by_user.end())
        close_session(open->second, CloseReason::Timeout, now, "blocked");
    emit(now, EventKind::UserBlocked, std::nullopt, json{{"user_id", user}, {"reason", reason}});
    return state_.users.at(user);
}

UserAccount Engine::unblock_user(const UserId& user, const std::string& admin_token, TimeMs now) {
    if (admin_token != config_.gateway.admin_token) throw Error(ErrorCode::Unauthorized, "bad admin token");
    advance_clock(now);
    tick(now);
    const auto it = state_.users.find(user);
    if (it == state_.users.end()) throw Error(ErrorCode::UnknownUser, user);
    if (!it->second.blocked) return it->second;
    emit(now, EventKind::UserUnblocked, std::nullopt, json{{"user_id", user}});
    return state_.users.at(user);
}

void Engine::file_report(const WorkerId& reporter, SessionId session, std::vector<int> message_indices,
                         std::vector<int> fact_indices, const std::string& note, TimeMs now) {
    advance_clock(now);
    tick(now);
    const SessionRecord& s = session_or_throw(session);
    bool involved = s.participant(reporter) != nullptr;
    // Workers see the user's earlier conversations too, so they may report those.
    if (!involved)
        for (SessionId other : state_.users.at(s.user_id).sessions)
            involved = involved || state_.session(other)->participant(reporter) != nullptr;
    if (!involved) throw Error(ErrorCode::NotAParticipant, reporter);
    emit(now, EventKind::ReportFiled, std::nullopt,
         json{{"worker_id", reporter},
              {"reported_session", session},
              {"message_indices", message_indices},
              {"fact_indices", fact_indices},
              {"note", note}});
}

}  // namespace chorus
