#include "chorus/http_api.hpp"

#include <chrono>
#include <filesystem>

#include <httplib.h>

#include "chorus/analytics.hpp"

namespace chorus {

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownMessage:
        case ErrorCode::UnknownUser:
        case ErrorCode::UnknownAssignment: return 404;
        case ErrorCode::Unauthorized: return 401;
        case ErrorCode::NotAParticipant: return 403;
        case ErrorCode::EmptyBody:
        case ErrorCode::InvalidScenario:
        case ErrorCode::InfeasibleTargets:
        case ErrorCode::NegativeAssignments:
        case ErrorCode::InvalidConfig: return 400;
        case ErrorCode::PlatformUnavailable: return 503;
        case ErrorCode::CorruptLog:
        case ErrorCode::ClockWentBackwards: return 500;
        default: return 409;  // the request conflicts with the current state
    }
}

namespace {

using httplib::Request;
using httplib::Response;

void reply(Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void fail(Response& res, int status, std::string_view code, const std::string& message) {
    reply(res, status, json{{"error", code}, {"message", message}});
}

json body_of(const Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("request body must be a JSON object");
    return j;
}

std::string string_field(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) throw std::invalid_argument(std::string(key) + " is required");
    return j.at(key).get<std::string>();
}

// Worker identity: the worker_id field, else the X-Worker-Id header, else ?worker_id=.
WorkerId worker_of(const Request& req, const json& body) {
    if (body.contains("worker_id")) return string_field(body, "worker_id");
    if (req.has_header("X-Worker-Id")) return req.get_header_value("X-Worker-Id");
    if (req.has_param("worker_id")) return req.get_param_value("worker_id");
    throw std::invalid_argument("worker_id is required");
}

std::string admin_token_of(const Request& req) {
    if (req.has_header("X-Admin-Token")) return req.get_header_value("X-Admin-Token");
    const std::string auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) return auth.substr(7);
    return "";
}

std::uint64_t path_id(const Request& req, std::size_t i) {
    const std::string& s = req.matches[i];
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad id " + s);
    return v;
}

std::vector<int> index_list(const json& j, const char* key) {
    if (!j.contains(key)) return {};
    return j.at(key).get<std::vector<int>>();
}

json account_json(const UserAccount& a) {
    json j{{"user_id", a.user_id}, {"blocked", a.blocked}, {"first_seen_at", a.first_seen_at}};
    j["blocked_at"] = a.blocked_at ? json(*a.blocked_at) : json(nullptr);
    j["blocked_reason"] = a.blocked_reason ? json(*a.blocked_reason) : json(nullptr);
    return j;
}

// What the user client may see: their own messages, auto-replies and delivered
// crowd messages. No pending proposals, votes, workers or counts.
json user_chat(const SystemState& st, std::span<const EventLogEntry> log, const UserId& user) {
    json items = json::array();
    for (const auto& e : log) {
        const json& p = e.payload;
        switch (e.kind) {
            case EventKind::UserMessage:
                if (p.at("user_id") == user && !p.at("dropped").get<bool>())
                    items.push_back({{"from", "user"}, {"body", p.at("body")}, {"at", e.at}});
                break;
            case EventKind::AutoReplySent:
                if (p.at("user_id") == user) items.push_back({{"from", "agent"}, {"body", p.at("body")}, {"at", e.at}});
                break;
            case EventKind::MessageDelivered:
                if (p.at("user_id") == user) {
                    const ChatMessage* m = st.message(MessageId{p.at("message_id").get<std::uint64_t>()});
                    if (m != nullptr) items.push_back({{"from", "agent"}, {"body", m->body}, {"at", e.at}});
                }
                break;
            default: break;
        }
    }
    return json{{"user_id", user}, {"messages", items}};
}

json worker_score(const SystemState& st, const WorkerId& w) {
    json sessions = json::array();
    long long total_points = 0, total_bonus = 0;
    for (const auto& [key, ledger] : st.ledgers) {
        if (key.second != w) continue;
        json row{{"session_id", key.first}, {"points", ledger.total}};
        const auto settled = st.settlements.find(key.first);
        if (settled != st.settlements.end() && settled->second.contains(w)) {
            const Cents bonus = settled->second.at(w);
            row["bonus_cents"] = bonus.value;
            total_bonus += bonus.value;
        } else {
            row["bonus_cents"] = nullptr;
        }
        total_points += ledger.total;
        sessions.push_back(row);
    }
    json j{{"worker_id", w}, {"total_points", total_points}, {"total_bonus_cents", total_bonus},
           {"sessions", sessions}};
    const auto current = st.worker_session.find(w);
    j["current_session"] = current == st.worker_session.end() ? json(nullptr) : json(current->second);
    if (const RetainerEntry* r = st.retainer.find(w)) {
        j["retainer"] = {{"assignment_id", r->assignment_id}, {"expires_at", r->expires_at}, {"strikes", r->strikes}};
        const auto ping = st.retainer.pings.find(w);
        if (ping != st.retainer.pings.end())
            j["ping"] = {{"session_id", ping->second.session_id}, {"sent_at", ping->second.sent_at}};
    }
    return j;
}

std::string sse_frame(const EventLogEntry& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + std::string(to_string(e.kind)) +
           "\ndata: " + to_jsonl_line(e) + "\n\n";
}

}  // namespace

Service::Service(Options options) : options_(std::move(options)), engine_(options_.config) {
    options_.config.validate();
    if (!options_.clock)
        options_.clock = [] {
            return std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                .count();
        };
    if (!options_.log_path.empty()) {
        if (std::filesystem::exists(options_.log_path))
            engine_ = Engine::restore(options_.config, EventLog::load(options_.log_path));
        out_.open(options_.log_path, std::ios::app | std::ios::binary);
        if (!out_) throw std::runtime_error("cannot open " + options_.log_path + " for appending");
    }
    engine_.set_event_sink([this](const EventLogEntry& e) { persist(e); });
}

Service::~Service() { shut_down(); }

void Service::persist(const EventLogEntry& e) {
    if (out_.is_open()) {
        out_ << to_jsonl_line(e) << '\n';
        out_.flush();
    }
    changed_.notify_all();
}

TimeMs Service::now() const { return std::max(options_.clock(), engine_.state().last_at); }

void Service::tick() {
    std::lock_guard lock(mu_);
    const TimeMs t = now();
    engine_.tick(t);
    std::vector<SessionId> open;
    for (const auto& [id, s] : engine_.state().sessions)
        if (s.is_open()) open.push_back(id);
    for (SessionId s : open) engine_.accrue_waiting(s, t);
}

void Service::shut_down() {
    stopping_ = true;
    std::lock_guard lock(mu_);
    changed_.notify_all();
}

EventLog Service::log_snapshot() const {
    std::lock_guard lock(mu_);
    return engine_.log();
}

SystemState Service::state_snapshot() const {
    std::lock_guard lock(mu_);
    return engine_.state();
}

void Service::mount(httplib::Server& server) {
    // Runs `fn` under the lock and turns engine errors into HTTP errors.
    auto guarded = [this](std::function<void(const Request&, Response&, TimeMs)> fn) {
        return [this, fn = std::move(fn)](const Request& req, Response& res) {
            try {
                std::lock_guard lock(mu_);
                fn(req, res, now());
            } catch (const Error& e) {
                fail(res, http_status(e.code()), to_string(e.code()), e.what());
            } catch (const json::exception& e) {
                fail(res, 400, "BadRequest", e.what());
            } catch (const std::invalid_argument& e) {
                fail(res, 400, "BadRequest", e.what());
            } catch (const std::out_of_range& e) {
                fail(res, 400, "BadRequest", e.what());
            }
        };
    };
    auto admin = [this](const Request& req) {
        if (admin_token_of(req) != options_.config.gateway.admin_token)
            throw Error(ErrorCode::Unauthorized, "admin token required");
    };

    server.Get("/healthz", [this](const Request&, Response& res) {
        std::lock_guard lock(mu_);
        reply(res, 200, json{{"ok", true}, {"last_seq", engine_.log().last_seq()}});
    });

    // -- users ------------------------------------------------------------
    server.Post(R"(/users/([^/]+)/messages)", guarded([this](const Request& req, Response& res, TimeMs t) {
        const json b = body_of(req);
        const IngestResult r = engine_.handle_inbound_user_message(req.matches[1], b.value("body", ""), t);
        json out = r;
        out.erase("recruit_error");
        out.erase("message_id");
        reply(res, r.status == IngestStatus::SessionOpened ? 201 : 200, out);
    }));
    server.Get(R"(/users/([^/]+)/chat)", guarded([this](const Request& req, Response& res, TimeMs) {
        reply(res, 200, user_chat(engine_.state(), engine_.log().entries(), req.matches[1]));
    }));

    // -- worker console -----------------------------------------------------
    server.Get(R"(/sessions/(\d+)/view)", guarded([this](const Request& req, Response& res, TimeMs) {
        reply(res, 200, engine_.render_worker_view(SessionId{path_id(req, 1)}, worker_of(req, json::object())));
    }));
    server.Get(R"(/sessions/(\d+))", guarded([this](const Request& req, Response& res, TimeMs) {
        const SessionRecord* s = engine_.state().session(SessionId{path_id(req, 1)});
        if (s == nullptr) throw Error(ErrorCode::UnknownSession, req.matches[1]);
        reply(res, 200, *s);
    }));
    server.Post(R"(/sessions/(\d+)/proposals)", guarded([this](const Request& req, Response& res, TimeMs t) {
        const json b = body_of(req);
        reply(res, 201, engine_.propose_message(SessionId{path_id(req, 1)}, worker_of(req, b), b.value("body", ""), t));
    }));
    server.Post(R"(/sessions/(\d+)/proposals/(\d+)/votes)",
                guarded([this](const Request& req, Response& res, TimeMs t) {
                    const json b = body_of(req);
                    reply(res, 201,
                          engine_.vote_message(SessionId{path_id(req, 1)}, worker_of(req, b), MessageId{path_id(req, 2)},
                                               t));
                }));
    server.Post(R"(/sessions/(\d+)/facts)", guarded([this](const Request& req, Response& res, TimeMs t) {
        const json b = body_of(req);
        reply(res, 201, engine_.post_fact(SessionId{path_id(req, 1)}, worker_of(req, b), b.value("body", ""), t));
    }));
    server.Post(R"(/sessions/(\d+)/heartbeat)", guarded([this](const Request& req, Response& res, TimeMs t) {
        const json b = body_of(req);
        const SessionId s{path_id(req, 1)};
        engine_.heartbeat(s, worker_of(req, b), t);
        reply(res, 200, json{{"active_count", engine_.active_count(s, t)}});
    }));
    server.Post(R"(/sessions/(\d+)/submission)", guarded([this](const Request& req, Response& res, TimeMs t) {
        const json b = body_of(req);
        reply(res, 200, engine_.submit_hit(SessionId{path_id(req, 1)}, worker_of(req, b), t));
    }));
    server.Post(R"(/sessions/(\d+)/reports)", guarded([this](const Request& req, Response& res, TimeMs t) {
        const json b = body_of(req);
        engine_.file_report(worker_of(req, b), SessionId{path_id(req, 1)}, index_list(b, "message_indices"),
                            index_list(b, "fact_indices"), b.value("note", ""), t);
        reply(res, 201, json{{"filed", true}});
    }));
    server.Get(R"(/workers/([^/]+)/score)", guarded([this](const Request& req, Response& res, TimeMs) {
        reply(res, 200, worker_score(engine_.state(), req.matches[1]));
    }));
    server.Post(R"(/workers/([^/]+)/ping-response)", guarded([this](const Request& req, Response& res, TimeMs t) {
        const bool joined = engine_.respond_to_ping(req.matches[1], t);
        const auto s = engine_.state().worker_session.find(req.matches[1]);
        json out{{"joined", joined}};
        out["session_id"] = joined && s != engine_.state().worker_session.end() ? json(s->second) : json(nullptr);
        reply(res, 200, out);
    }));

    // -- crowd platform -----------------------------------------------------
    server.Get("/assignments", guarded([this](const Request& req, Response& res, TimeMs) {
        const std::string want = req.has_param("state") ? req.get_param_value("state") : "unclaimed";
        AssignmentState state;
        try {
            state = assignment_state_from(want);
        } catch (const Error&) {
            throw std::invalid_argument("unknown assignment state '" + want + "'");
        }
        json out = json::array();
        for (const auto& [id, a] : engine_.state().assignments)
            if (a.state == state) out.push_back(a);
        reply(res, 200, out);
    }));
    server.Post(R"(/assignments/(\d+)/claim)", guarded([this](const Request& req, Response& res, TimeMs t) {
        const json b = body_of(req);
        const ClaimResult r = engine_.claim_assignment(AssignmentId{path_id(req, 1)}, worker_of(req, b), t);
        json out{{"outcome", r.outcome == ClaimOutcome::JoinedConversation ? "joined_conversation" : "entered_retainer"}};
        out["session_id"] = r.session_id ? json(*r.session_id) : json(nullptr);
        reply(res, 200, out);
    }));

    // -- admin --------------------------------------------------------------
    server.Post("/admin/block", guarded([this](const Request& req, Response& res, TimeMs t) {
        const json b = body_of(req);
        reply(res, 200,
              account_json(engine_.block_user(string_field(b, "user_id"), b.value("reason", ""), admin_token_of(req), t)));
    }));
    server.Post("/admin/unblock", guarded([this](const Request& req, Response& res, TimeMs t) {
        const json b = body_of(req);
        reply(res, 200, account_json(engine_.unblock_user(string_field(b, "user_id"), admin_token_of(req), t)));
    }));
    server.Get("/admin/reports", guarded([this, admin](const Request& req, Response& res, TimeMs) {
        admin(req);
        json out = json::array();
        for (const auto& r : engine_.state().reports)
            out.push_back({{"worker_id", r.reporter},
                           {"session_id", r.session_id},
                           {"message_indices", r.message_indices},
                           {"fact_indices", r.fact_indices},
                           {"note", r.note},
                           {"at", r.at}});
        reply(res, 200, out);
    }));
    server.Get("/admin/analytics/cost", guarded([this, admin](const Request& req, Response& res, TimeMs) {
        admin(req);
        const int days = req.has_param("period_days") ? std::stoi(req.get_param_value("period_days")) : 0;
        reply(res, 200, deployment_cost_summary(engine_.log().entries(), days, engine_.config()));
    }));
    server.Get("/admin/analytics/sessions", guarded([this, admin](const Request& req, Response& res, TimeMs) {
        admin(req);
        reply(res, 200, session_statistics(engine_.log().entries()));
    }));
    server.Get("/admin/analytics/workers", guarded([this, admin](const Request& req, Response& res, TimeMs) {
        admin(req);
        reply(res, 200, worker_quality(engine_.log().entries()));
    }));
    server.Get("/admin/state", guarded([this, admin](const Request& req, Response& res, TimeMs) {
        admin(req);
        reply(res, 200, summarize(engine_.state()));
    }));

    // -- event streams ------------------------------------------------------
    // Server-sent events, one frame per log entry, `id` = seq. A client that
    // reconnects with ?since=<seq> or Last-Event-ID misses nothing. A session's
    // stream ends once the session is closed and every one of its events is sent.
    auto stream = [this](std::optional<SessionId> session, const Request& req, Response& res) {
        std::uint64_t since = 0;
        try {
            if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
            else if (req.has_header("Last-Event-ID")) since = std::stoull(req.get_header_value("Last-Event-ID"));
        } catch (const std::exception&) {
            return fail(res, 400, "BadRequest", "since must be a sequence number");
        }
        {
            std::lock_guard lock(mu_);
            if (session && engine_.state().session(*session) == nullptr)
                return fail(res, 404, to_string(ErrorCode::UnknownSession), std::to_string(session->value));
        }
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [this, session, since](std::size_t, httplib::DataSink& sink) mutable {
            std::string out;
            bool done = false;
            {
                std::unique_lock lock(mu_);
                auto collect = [&] {
                    for (const auto& e : engine_.log().since(since)) {
                        if (!session || e.session_id == session) out += sse_frame(e);
                        since = e.seq;
                    }
                    if (session) {
                        const SessionRecord* s = engine_.state().session(*session);
                        done = s != nullptr && !s->is_open();
                    }
                    done = done || stopping_;
                };
                collect();
                if (out.empty() && !done) {
                    auto fresh = [&] { return engine_.log().last_seq() > since || stopping_; };
                    if (!changed_.wait_for(lock, std::chrono::milliseconds(options_.stream_keepalive), fresh)) {
                        lock.unlock();
                        return sink.write(": keepalive\n\n", 13);
                    }
                    collect();
                }
            }
            if (!out.empty() && !sink.write(out.data(), out.size())) return false;
            if (done) sink.done();
            return true;
        });
    };
    server.Get(R"(/sessions/(\d+)/events)", [stream](const Request& req, Response& res) {
        std::optional<SessionId> s;
        try {
            s = SessionId{path_id(req, 1)};
        } catch (const std::exception&) {
            return fail(res, 400, "BadRequest", "bad session id");
        }
        stream(s, req, res);
    });
    server.Get("/events", [stream](const Request& req, Response& res) { stream(std::nullopt, req, res); });
}

}  // namespace chorus
