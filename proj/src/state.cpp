#include "chorus/state.hpp"

#include <algorithm>

namespace chorus {
namespace {

template <typename IdT>
IdT id_at(const json& payload, const char* key) {
    return IdT{payload.at(key).get<std::uint64_t>()};
}

std::optional<WorkerId> optional_worker(const json& payload) {
    const auto it = payload.find("worker_id");
    if (it == payload.end() || it->is_null()) return std::nullopt;
    return it->get<WorkerId>();
}

SessionRecord& session_at(SystemState& st, const EventLogEntry& e) {
    if (!e.session_id) throw Error(ErrorCode::CorruptLog, "event without session_id at seq " + std::to_string(e.seq));
    const auto it = st.sessions.find(*e.session_id);
    if (it == st.sessions.end())
        throw Error(ErrorCode::CorruptLog, "unknown session at seq " + std::to_string(e.seq));
    return it->second;
}

Assignment& assignment_at(SystemState& st, AssignmentId id, const EventLogEntry& e) {
    const auto it = st.assignments.find(id);
    if (it == st.assignments.end())
        throw Error(ErrorCode::CorruptLog, "unknown assignment at seq " + std::to_string(e.seq));
    return it->second;
}

void move_assignment(Assignment& a, AssignmentState to) {
    a.state = to;
    a.history.push_back(to);
}

void refresh_deadline(SessionRecord& s) {
    s.handshake_complete = s.handshake.complete();
    s.deadline = deadline_for(s);
}

// Any worker action counts as presence; a worker returning after a lapse restarts
// their waiting interval at the anchor the engine recorded.
void touch(SessionRecord& s, const WorkerId& w, const EventLogEntry& e) {
    if (Participant* p = s.participant(w)) {
        p->last_heartbeat = e.at;
        if (const auto it = e.payload.find("waiting_anchor"); it != e.payload.end())
            p->waiting_anchor = it->get<TimeMs>();
    }
}

void end_retainer_interval(RetainerPool& pool, const WorkerId& w, TimeMs at) {
    for (auto it = pool.history.rbegin(); it != pool.history.rend(); ++it) {
        if (it->worker_id == w && !it->end) {
            it->end = at;
            return;
        }
    }
}

void remove_waiting(RetainerPool& pool, const WorkerId& w) {
    std::erase_if(pool.waiting, [&](const RetainerEntry& r) { return r.worker_id == w; });
    pool.pings.erase(w);
}

void join_session(SystemState& st, SessionRecord& s, const WorkerId& w, AssignmentId a, TimeMs at) {
    s.participants.push_back(Participant{w, a, at, at, at, SubmitState::None});
    st.worker_session[w] = s.session_id;
}

}  // namespace

const SessionRecord* SystemState::session(SessionId id) const {
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : &it->second;
}

const ChatMessage* SystemState::message(MessageId id) const {
    const auto it = messages.find(id);
    return it == messages.end() ? nullptr : &it->second;
}

const PointsLedger* SystemState::ledger(SessionId s, const WorkerId& w) const {
    const auto it = ledgers.find({s, w});
    return it == ledgers.end() ? nullptr : &it->second;
}

int SystemState::points(SessionId s, const WorkerId& w) const {
    const PointsLedger* l = ledger(s, w);
    return l ? l->total : 0;
}

void apply(SystemState& st, const EventLogEntry& e) {
    const json& p = e.payload;
    switch (e.kind) {
        case EventKind::SessionOpened: {
            const SessionId sid = *e.session_id;
            const UserId user = p.at("user_id").get<UserId>();
            auto [acct, inserted] = st.users.try_emplace(user);
            if (inserted) {
                acct->second.user_id = user;
                acct->second.display_alias = user;
                acct->second.first_seen_at = e.at;
            }
            acct->second.sessions.push_back(sid);
            SessionRecord s;
            s.session_id = sid;
            s.user_id = user;
            s.created_at = e.at;
            s.handshake_timeout = p.at("handshake_timeout_ms").get<TimeMs>();
            s.idle_timeout = p.at("idle_timeout_ms").get<TimeMs>();
            refresh_deadline(s);
            st.sessions[sid] = std::move(s);
            st.open_session_by_user[user] = sid;
            st.next_session = std::max(st.next_session, sid.value + 1);
            break;
        }
        case EventKind::UserMessage: {
            if (p.value("dropped", false)) break;
            SessionRecord& s = session_at(st, e);
            const MessageId mid = id_at<MessageId>(p, "message_id");
            ChatMessage m;
            m.message_id = mid;
            m.session_id = s.session_id;
            m.author = p.at("user_id").get<UserId>();
            m.body = p.at("body").get<std::string>();
            m.proposed_at = e.at;
            m.kind = MessageKind::User;
            m.status = MessageStatus::Accepted;
            m.accepted_at = e.at;
            st.messages[mid] = std::move(m);
            s.messages.push_back(mid);
            s.last_user_message_at = e.at;
            s.handshake.observe_user_message();
            refresh_deadline(s);
            st.next_message = std::max(st.next_message, mid.value + 1);
            break;
        }
        case EventKind::ProposalCreated: {
            SessionRecord& s = session_at(st, e);
            const MessageId mid = id_at<MessageId>(p, "message_id");
            const WorkerId w = p.at("worker_id").get<WorkerId>();
            ChatMessage m;
            m.message_id = mid;
            m.session_id = s.session_id;
            m.author = w;
            m.body = p.at("body").get<std::string>();
            m.proposed_at = e.at;
            m.kind = MessageKind::WorkerProposal;
            m.votes.insert(w);
            m.status = MessageStatus::Pending;
            st.messages[mid] = std::move(m);
            s.messages.push_back(mid);
            touch(s, w, e);
            st.next_message = std::max(st.next_message, mid.value + 1);
            break;
        }
        case EventKind::VoteCast: {
            SessionRecord& s = session_at(st, e);
            const WorkerId w = p.at("worker_id").get<WorkerId>();
            st.messages.at(id_at<MessageId>(p, "message_id")).votes.insert(w);
            touch(s, w, e);
            break;
        }
        case EventKind::MessageAccepted: {
            SessionRecord& s = session_at(st, e);
            ChatMessage& m = st.messages.at(id_at<MessageId>(p, "message_id"));
            m.status = MessageStatus::Accepted;
            m.accepted_at = e.at;
            s.handshake.observe_crowd_accepted();
            refresh_deadline(s);
            break;
        }
        case EventKind::MessageDelivered:
            st.deliveries[id_at<MessageId>(p, "message_id")] = e.at;
            break;
        case EventKind::FactPosted: {
            SessionRecord& s = session_at(st, e);
            const FactId fid = id_at<FactId>(p, "fact_id");
            const WorkerId w = p.at("worker_id").get<WorkerId>();
            st.facts[fid] = FactEntry{fid, s.session_id, w, p.at("body").get<std::string>(), e.at};
            s.facts.push_back(fid);
            touch(s, w, e);
            st.next_fact = std::max(st.next_fact, fid.value + 1);
            break;
        }
        case EventKind::PointsAwarded: {
            SessionRecord& s = session_at(st, e);
            const WorkerId w = p.at("worker_id").get<WorkerId>();
            PointsLedger& l = st.ledgers[{s.session_id, w}];
            l.session_id = s.session_id;
            l.worker_id = w;
            l.add(action_from(p.at("action").get<std::string>()), p.at("points").get<int>(), e.at);
            if (const auto it = p.find("waiting_anchor"); it != p.end())
                if (Participant* part = s.participant(w)) part->waiting_anchor = it->get<TimeMs>();
            break;
        }
        case EventKind::WorkerHeartbeat:
            touch(session_at(st, e), p.at("worker_id").get<WorkerId>(), e);
            break;
        case EventKind::SessionClosed: {
            SessionRecord& s = session_at(st, e);
            s.state = SessionState::Closed;
            s.close_reason = close_reason_from(p.at("reason").get<std::string>());
            s.closed_at = e.at;
            for (MessageId mid : s.messages) {
                ChatMessage& m = st.messages.at(mid);
                if (m.status == MessageStatus::Pending) m.status = MessageStatus::Expired;
            }
            if (auto it = st.open_session_by_user.find(s.user_id);
                it != st.open_session_by_user.end() && it->second == s.session_id)
                st.open_session_by_user.erase(it);
            std::erase_if(st.retainer.pings, [&](const auto& kv) { return kv.second.session_id == s.session_id; });
            break;
        }
        case EventKind::SubmissionRecorded: {
            SessionRecord& s = session_at(st, e);
            const WorkerId w = p.at("worker_id").get<WorkerId>();
            const bool forced = p.at("forced").get<bool>();
            Participant* part = s.participant(w);
            if (!part) throw Error(ErrorCode::CorruptLog, "submission by non-participant at seq " + std::to_string(e.seq));
            part->submitted = forced ? SubmitState::Forced : SubmitState::Voluntary;
            (forced ? s.forced_submissions : s.submissions).insert(w);
            if (auto it = st.worker_session.find(w); it != st.worker_session.end() && it->second == s.session_id)
                st.worker_session.erase(it);
            if (p.at("assignment_outcome").get<std::string>() == "submitted") {
                Assignment& a = assignment_at(st, part->assignment_id, e);
                move_assignment(a, AssignmentState::Submitted);
                a.resolved_at = e.at;
            }
            break;
        }
        case EventKind::BonusSettled: {
            SessionRecord& s = session_at(st, e);
            auto& out = st.settlements[s.session_id];
            for (const auto& [w, cents] : p.at("bonuses").items()) out[w] = Cents{cents.get<std::int64_t>()};
            s.settled = true;
            break;
        }
        case EventKind::HitPosted: {
            const HitId hid = id_at<HitId>(p, "hit_id");
            HitPosting h;
            h.hit_id = hid;
            h.session_id = e.session_id;
            h.posted_at = e.at;
            h.base_pay = Cents{p.at("base_pay_cents").get<std::int64_t>()};
            h.platform_ref = p.value("platform_ref", "");
            for (const auto& aid : p.at("assignment_ids")) {
                const AssignmentId a{aid.get<std::uint64_t>()};
                h.assignments.push_back(a);
                Assignment asg;
                asg.assignment_id = a;
                asg.hit_id = hid;
                asg.history.push_back(AssignmentState::Unclaimed);
                st.assignments[a] = std::move(asg);
                st.next_assignment = std::max(st.next_assignment, a.value + 1);
            }
            if (e.session_id) session_at(st, e).hit_id = hid;
            st.hits[hid] = std::move(h);
            st.next_hit = std::max(st.next_hit, hid.value + 1);
            break;
        }
        case EventKind::AssignmentClaimed: {
            Assignment& a = assignment_at(st, id_at<AssignmentId>(p, "assignment_id"), e);
            const WorkerId w = p.at("worker_id").get<WorkerId>();
            a.worker_id = w;
            a.claimed_at = e.at;
            st.retainer.slots.erase(a.assignment_id);
            move_assignment(a, AssignmentState::Claimed);
            if (p.at("joins").get<std::string>() == "conversation") {
                SessionRecord& s = session_at(st, e);
                move_assignment(a, AssignmentState::InConversation);
                a.session_id = s.session_id;
                join_session(st, s, w, a.assignment_id, e.at);
            }
            break;
        }
        case EventKind::RetainerEntered: {
            Assignment& a = assignment_at(st, id_at<AssignmentId>(p, "assignment_id"), e);
            const TimeMs expires = p.at("expires_at").get<TimeMs>();
            const auto w = optional_worker(p);
            if (!w) {
                a.retainer_slot_expires_at = expires;
                st.retainer.slots[a.assignment_id] = expires;
                break;
            }
            move_assignment(a, AssignmentState::InRetainer);
            a.session_id.reset();
            st.retainer.waiting.push_back(RetainerEntry{*w, a.assignment_id, e.at, expires, 0});
            st.retainer.history.push_back(RetainerInterval{*w, a.assignment_id, e.at, std::nullopt});
            if (auto it = st.worker_session.find(*w); it != st.worker_session.end()) st.worker_session.erase(it);
            break;
        }
        case EventKind::RetainerPinged:
            st.retainer.pings[p.at("worker_id").get<WorkerId>()] = Ping{*e.session_id, e.at};
            break;
        case EventKind::RetainerDispatched: {
            const WorkerId w = p.at("worker_id").get<WorkerId>();
            Assignment& a = assignment_at(st, id_at<AssignmentId>(p, "assignment_id"), e);
            SessionRecord& s = session_at(st, e);
            remove_waiting(st.retainer, w);
            end_retainer_interval(st.retainer, w, e.at);
            move_assignment(a, AssignmentState::InConversation);
            a.session_id = s.session_id;
            join_session(st, s, w, a.assignment_id, e.at);
            break;
        }
        case EventKind::RetainerPingMissed: {
            const WorkerId w = p.at("worker_id").get<WorkerId>();
            st.retainer.pings.erase(w);
            auto it = std::find_if(st.retainer.waiting.begin(), st.retainer.waiting.end(),
                                   [&](const RetainerEntry& r) { return r.worker_id == w; });
            if (it != st.retainer.waiting.end()) {
                RetainerEntry entry = *it;
                entry.strikes = p.at("strikes").get<int>();
                st.retainer.waiting.erase(it);
                st.retainer.waiting.push_back(entry);
            }
            break;
        }
        case EventKind::RetainerExpired: {
            Assignment& a = assignment_at(st, id_at<AssignmentId>(p, "assignment_id"), e);
            if (const auto w = optional_worker(p)) {
                remove_waiting(st.retainer, *w);
                end_retainer_interval(st.retainer, *w, e.at);
            }
            st.retainer.slots.erase(a.assignment_id);
            move_assignment(a, AssignmentState::Expired);
            a.worker_id.reset();
            a.session_id.reset();
            a.resolved_at = e.at;
            break;
        }
        case EventKind::AutoReplySent:
            break;
        case EventKind::UserBlocked: {
            UserAccount& u = st.users.at(p.at("user_id").get<UserId>());
            u.blocked = true;
            u.blocked_at = e.at;
            u.blocked_reason = p.at("reason").get<std::string>();
            break;
        }
        case EventKind::UserUnblocked: {
            UserAccount& u = st.users.at(p.at("user_id").get<UserId>());
            u.blocked = false;
            u.blocked_at.reset();
            u.blocked_reason.reset();
            break;
        }
        case EventKind::ReportFiled:
            st.reports.push_back(IssueReport{p.at("worker_id").get<WorkerId>(),
                                             id_at<SessionId>(p, "reported_session"),
                                             p.at("message_indices").get<std::vector<int>>(),
                                             p.at("fact_indices").get<std::vector<int>>(),
                                             p.at("note").get<std::string>(), e.at});
            break;
    }
    st.last_seq = e.seq;
    st.last_at = e.at;
}

SystemState replay(std::span<const EventLogEntry> log) {
    SystemState st;
    for (const auto& e : log) {
        if (e.seq != st.last_seq + 1)
            throw Error(ErrorCode::CorruptLog, "expected seq " + std::to_string(st.last_seq + 1) + ", found " +
                                                   std::to_string(e.seq));
        if (e.at < st.last_at) throw Error(ErrorCode::CorruptLog, "time decreases at seq " + std::to_string(e.seq));
        try {
            apply(st, e);
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::CorruptLog, "malformed payload at seq " + std::to_string(e.seq) + ": " + ex.what());
        } catch (const std::out_of_range& ex) {
            throw Error(ErrorCode::CorruptLog, "dangling reference at seq " + std::to_string(e.seq));
        }
    }
    return st;
}

json summarize(const SystemState& st) {
    int open = 0;
    for (const auto& [id, s] : st.sessions) open += s.is_open() ? 1 : 0;
    return json{{"users", st.users.size()},
                {"sessions", st.sessions.size()},
                {"open_sessions", open},
                {"messages", st.messages.size()},
                {"facts", st.facts.size()},
                {"hits", st.hits.size()},
                {"assignments", st.assignments.size()},
                {"retainer_waiting", st.retainer.waiting.size()},
                {"deliveries", st.deliveries.size()},
                {"last_seq", st.last_seq},
                {"last_at", st.last_at}};
}

}  // namespace chorus
