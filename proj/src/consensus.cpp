#include "chorus/consensus.hpp"

#include "chorus/engine.hpp"

namespace chorus {

std::string_view to_string(MessageKind k) { return k == MessageKind::User ? "user" : "worker_proposal"; }

std::string_view to_string(MessageStatus s) {
    switch (s) {
        case MessageStatus::Pending: return "pending";
        case MessageStatus::Accepted: return "accepted";
        case MessageStatus::Expired: return "expired";
    }
    return "unknown";
}

std::string_view to_string(DisplayClass c) {
    switch (c) {
        case DisplayClass::OtherPending: return "other_pending";
        case DisplayClass::OwnPendingOrVoted: return "own";
        case DisplayClass::Accepted: return "accepted";
    }
    return "unknown";
}

int ActiveWorkerRoster::active_count(TimeMs now) const {
    int n = 0;
    for (const auto& [w, hb] : last_heartbeat) n += (now - hb <= heartbeat_window) ? 1 : 0;
    return n;
}

bool ActiveWorkerRoster::is_active(const WorkerId& w, TimeMs now) const {
    const auto it = last_heartbeat.find(w);
    return it != last_heartbeat.end() && now - it->second <= heartbeat_window;
}

DisplayClass display_class_for(const ChatMessage& m, const WorkerId& viewer) {
    if (m.status == MessageStatus::Accepted) return DisplayClass::Accepted;
    if (m.votes.contains(viewer)) return DisplayClass::OwnPendingOrVoted;
    return DisplayClass::OtherPending;
}

int WorkerView::chat_separator_count() const {
    int n = 0;
    for (const auto& c : chat) n += c.separator ? 1 : 0;
    return n;
}

int WorkerView::fact_separator_count() const {
    int n = 0;
    for (const auto& f : facts) n += f.separator ? 1 : 0;
    return n;
}

void to_json(json& j, const ChatMessage& m) {
    j = json{{"message_id", m.message_id},
             {"session_id", m.session_id},
             {"author", m.author},
             {"body", m.body},
             {"proposed_at", m.proposed_at},
             {"kind", to_string(m.kind)},
             {"votes", m.votes},
             {"status", to_string(m.status)},
             {"accepted_at", m.accepted_at ? json(*m.accepted_at) : json(nullptr)}};
}

void to_json(json& j, const FactEntry& f) {
    j = json{{"fact_id", f.fact_id},
             {"session_id", f.session_id},
             {"author", f.author},
             {"body", f.body},
             {"posted_at", f.posted_at}};
}

void to_json(json& j, const WorkerView& v) {
    json chat = json::array();
    for (const auto& item : v.chat) {
        if (item.separator) {
            chat.push_back({{"type", "separator"},
                            {"before_session", item.separator->before},
                            {"after_session", item.separator->after},
                            {"label", "previous conversation above"}});
            continue;
        }
        const ViewMessage& m = *item.message;
        chat.push_back({{"type", "message"},
                        {"session_id", m.session_id},
                        {"index", m.index},
                        {"message_id", m.message_id},
                        {"kind", to_string(m.kind)},
                        {"author", m.author},
                        {"body", m.body},
                        {"at", m.at},
                        {"status", to_string(m.status)},
                        {"display_class", to_string(m.display)},
                        {"votes", m.vote_count}});
    }
    json facts = json::array();
    for (const auto& item : v.facts) {
        if (item.separator) {
            facts.push_back({{"type", "separator"},
                             {"before_session", item.separator->before},
                             {"after_session", item.separator->after},
                             {"label", "previous conversation below"}});
            continue;
        }
        const ViewFact& f = *item.fact;
        facts.push_back({{"type", "fact"},
                         {"session_id", f.session_id},
                         {"index", f.index},
                         {"fact_id", f.fact_id},
                         {"body", f.body},
                         {"at", f.at}});
    }
    j = json{{"session_id", v.session_id}, {"worker_id", v.worker_id}, {"chat", chat}, {"facts", facts},
             {"score", v.score}};
}

// ---------------------------------------------------------------------------
// Engine: proposals, votes, facts, presence

namespace {

// Payload addition for an action by a worker whose presence had lapsed.
void mark_resumed(json& payload, const Participant& p, TimeMs now, TimeMs window) {
    if (now - p.last_heartbeat > window) payload["waiting_anchor"] = now;
}

}  // namespace

ChatMessage Engine::propose_message(SessionId session, const WorkerId& worker, const std::string& body, TimeMs now) {
    advance_clock(now);
    tick(now);
    const SessionRecord& s = open_session_or_throw(session);
    const Participant& part = present_participant_or_throw(s, worker);
    if (trim(body).empty()) throw Error(ErrorCode::EmptyBody, "proposal body is empty");

    const MessageId mid{state_.next_message};
    json payload{{"message_id", mid}, {"worker_id", worker}, {"body", body}};
    mark_resumed(payload, part, now, config_.consensus.heartbeat_window);
    emit(now, EventKind::ProposalCreated, session, std::move(payload));
    award(session, worker, Action::Propose, config_.incentives.propose_points, now);
    accept_if_reached(mid, now);
    return *state_.message(mid);
}

ChatMessage Engine::vote_message(SessionId session, const WorkerId& worker, MessageId message, TimeMs now) {
    advance_clock(now);
    tick(now);
    const SessionRecord& s = open_session_or_throw(session);
    const Participant& part = present_participant_or_throw(s, worker);
    const ChatMessage* m = state_.message(message);
    if (m == nullptr || m->session_id != session)
        throw Error(ErrorCode::UnknownMessage, "message " + std::to_string(message.value));
    if (m->status != MessageStatus::Pending)
        throw Error(ErrorCode::MessageNotPending, "message " + std::to_string(message.value));
    if (m->votes.contains(worker)) throw Error(ErrorCode::AlreadyVoted, worker);

    json payload{{"message_id", message}, {"worker_id", worker}};
    mark_resumed(payload, part, now, config_.consensus.heartbeat_window);
    emit(now, EventKind::VoteCast, session, std::move(payload));
    award(session, worker, Action::Vote, config_.incentives.vote_points, now);
    accept_if_reached(message, now);
    return *state_.message(message);
}

MessageStatus Engine::evaluate_acceptance(MessageId message, TimeMs now) {
    advance_clock(now);
    tick(now);
    const ChatMessage* m = state_.message(message);
    if (m == nullptr) throw Error(ErrorCode::UnknownMessage, "message " + std::to_string(message.value));
    if (m->status == MessageStatus::Pending && session_or_throw(m->session_id).is_open())
        accept_if_reached(message, now);
    return state_.message(message)->status;
}

void Engine::accept_if_reached(MessageId message, TimeMs now) {
    const ChatMessage& m = *state_.message(message);
    if (m.status != MessageStatus::Pending) return;
    const SessionId session = m.session_id;
    const int active = active_count(session, now);
    const int threshold = acceptance_threshold(active, config_.consensus.threshold_percent);
    const int votes = static_cast<int>(m.votes.size());
    if (votes < threshold) return;

    const WorkerId proposer = m.author;
    emit(now, EventKind::MessageAccepted, session,
         json{{"message_id", message}, {"active_count", active}, {"threshold", threshold}, {"votes", votes}});
    award(session, proposer, Action::ProposalAccepted, config_.incentives.proposal_accepted_points, now);
    deliver_accepted_message(message, now);
}

FactEntry Engine::post_fact(SessionId session, const WorkerId& worker, const std::string& body, TimeMs now) {
    advance_clock(now);
    tick(now);
    const SessionRecord& s = open_session_or_throw(session);
    const Participant& part = present_participant_or_throw(s, worker);
    if (trim(body).empty()) throw Error(ErrorCode::EmptyBody, "fact body is empty");

    const FactId fid{state_.next_fact};
    json payload{{"fact_id", fid}, {"worker_id", worker}, {"body", body}};
    mark_resumed(payload, part, now, config_.consensus.heartbeat_window);
    emit(now, EventKind::FactPosted, session, std::move(payload));
    award(session, worker, Action::PostFact, config_.incentives.post_fact_points, now);
    return state_.facts.at(fid);
}

void Engine::heartbeat(SessionId session, const WorkerId& worker, TimeMs now) {
    advance_clock(now);
    tick(now);
    const SessionRecord& s = open_session_or_throw(session);
    const Participant& part = present_participant_or_throw(s, worker);
    json payload{{"worker_id", worker}};
    mark_resumed(payload, part, now, config_.consensus.heartbeat_window);
    emit(now, EventKind::WorkerHeartbeat, session, std::move(payload));
}

ActiveWorkerRoster Engine::roster(SessionId session) const {
    const SessionRecord& s = session_or_throw(session);
    ActiveWorkerRoster r;
    r.session_id = session;
    r.heartbeat_window = config_.consensus.heartbeat_window;
    for (const auto& p : s.participants)
        if (p.present()) r.last_heartbeat[p.worker_id] = p.last_heartbeat;
    return r;
}

int Engine::active_count(SessionId session, TimeMs now) const { return roster(session).active_count(now); }

WorkerView Engine::render_worker_view(SessionId session, const WorkerId& worker) const {
    const SessionRecord& current = session_or_throw(session);
    if (current.participant(worker) == nullptr)
        throw Error(ErrorCode::NotAParticipant, worker + " never joined session " + std::to_string(session.value));

    // The user's sessions up to and including this one, oldest first.
    std::vector<const SessionRecord*> history;
    for (SessionId sid : state_.users.at(current.user_id).sessions) {
        history.push_back(&state_.sessions.at(sid));
        if (sid == session) break;
    }

    WorkerView view;
    view.session_id = session;
    view.worker_id = worker;
    for (std::size_t i = 0; i < history.size(); ++i) {
        const SessionRecord& s = *history[i];
        if (i > 0) view.chat.push_back({std::nullopt, Separator{history[i - 1]->session_id, s.session_id}});
        int index = 0;
        for (MessageId mid : s.messages) {
            const ChatMessage& m = state_.messages.at(mid);
            ViewMessage vm;
            vm.session_id = s.session_id;
            vm.index = ++index;
            vm.message_id = mid;
            vm.kind = m.kind;
            vm.author = m.author;
            vm.body = m.body;
            vm.at = m.proposed_at;
            vm.status = m.status;
            vm.display = m.kind == MessageKind::User ? DisplayClass::Accepted : display_class_for(m, worker);
            vm.vote_count = static_cast<int>(m.votes.size());
            view.chat.push_back({vm, std::nullopt});
        }
    }
    for (std::size_t i = history.size(); i-- > 0;) {
        const SessionRecord& s = *history[i];
        if (i + 1 < history.size())
            view.facts.push_back({std::nullopt, Separator{s.session_id, history[i + 1]->session_id}});
        for (std::size_t k = s.facts.size(); k-- > 0;) {
            const FactEntry& f = state_.facts.at(s.facts[k]);
            view.facts.push_back({ViewFact{s.session_id, static_cast<int>(k + 1), f.fact_id, f.body, f.posted_at},
                                  std::nullopt});
        }
    }
    view.score = state_.points(session, worker);
    return view;
}

}  // namespace chorus
