#include <algorithm>
#include <functional>
#include <queue>

#include "chorus/simulation.hpp"

namespace chorus {
namespace {

const std::vector<std::string>& openers() {
    static const std::vector<std::string> pool = {
        "hello", "Hi, can you help me find a good pizza place?", "What time does the museum open tomorrow?",
        "I need a gift idea for my sister", "How do I get to the airport from downtown?",
        "Can you recommend a movie for tonight?",
    };
    return pool;
}

const std::vector<std::string>& follow_ups() {
    static const std::vector<std::string> pool = {
        "ok, what else?", "Is it open on weekends?", "How much does it cost?", "Anything closer?",
        "Can you tell me more?", "great, and how long does it take?", "hmm, something cheaper?",
    };
    return pool;
}

class Simulator {
public:
    Simulator(const Scenario& sc, std::uint64_t seed)
        : sc_(sc),
          config_(merge_config(Config{}, sc.config_overrides)),
          rng_(seed),
          platform_(sc.platform, rng_, [this](TimeMs t, AssignmentId a) { at(t, [this, a] { claim(a); }); }),
          engine_(config_, &platform_),
          seed_(seed) {
        engine_.set_event_sink([this](const EventLogEntry& e) { fresh_.push_back(e); });
        for (const auto& profile : sc_.workers)
            for (int i = 1; i <= profile.count; ++i) {
                char id[32];
                std::snprintf(id, sizeof id, "-%03d", i);
                workers_.push_back(WorkerAgent{profile.id_prefix + id, &profile});
                index_[workers_.back().id] = workers_.size() - 1;
            }
    }

    RunResult run();

private:
    struct Item {
        TimeMs at;
        std::uint64_t order;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Item& a, const Item& b) const {
            return a.at != b.at ? a.at > b.at : a.order > b.order;
        }
    };
    struct WorkerAgent {
        WorkerId id;
        const AgentProfile* profile;
    };
    struct UserAgent {
        const UserScript* script = nullptr;
        int turns_left = 0;
        int sessions_left = 0;
        bool talking = false;  // in a reactive conversation that has not been closed by the user
        bool reply_scheduled = false;
        int conversation = 0;  // bumps on every open, so stale replies are dropped
    };

    void at(TimeMs t, std::function<void()> fn) { queue_.push(Item{std::max(t, now_), order_++, std::move(fn)}); }
    TimeMs uniform_ms(Range r) {
        return static_cast<TimeMs>(std::llround(std::uniform_real_distribution<double>(r.lo, r.hi)(rng_) * kSecond));
    }

    template <typename F>
    void command(F&& f) {
        try {
            f();
        } catch (const Error& e) {
            // Agents act on what they saw a moment ago; the engine has the final word.
            if (e.code() == ErrorCode::ClockWentBackwards || e.code() == ErrorCode::CorruptLog) throw;
        }
    }

    bool present(const WorkerId& w, SessionId s) const {
        const SessionRecord* rec = engine_.state().session(s);
        if (rec == nullptr || !rec->is_open()) return false;
        const Participant* p = rec->participant(w);
        return p != nullptr && p->present();
    }
    bool busy(const WorkerId& w) const {
        return engine_.state().worker_session.contains(w) || engine_.state().retainer.find(w) != nullptr;
    }

    void observe_events();
    void claim(AssignmentId a);
    void worker_joined(const WorkerId& w, SessionId s);
    void worker_step(std::size_t worker, SessionId s);
    void worker_heartbeat(std::size_t worker, SessionId s);
    void accrue(SessionId s);
    void schedule_deadline(SessionId s);
    void user_says(const UserId& u, const std::string& body);
    void reactive_open(UserAgent& u);
    void reactive_reply(UserAgent& u);
    void leave(UserAgent& u);
    void crowd_line(const UserId& u, const CrowdLine& line, int attempt);

    const Scenario& sc_;
    Config config_;
    std::mt19937_64 rng_;
    SimulatedPlatform platform_;
    Engine engine_;
    std::uint64_t seed_;
    std::priority_queue<Item, std::vector<Item>, Later> queue_;
    std::uint64_t order_ = 0;
    TimeMs now_ = 0;
    std::vector<EventLogEntry> fresh_;
    std::vector<WorkerAgent> workers_;
    std::map<WorkerId, std::size_t> index_;
    std::map<UserId, UserAgent> users_;
    std::map<SessionId, TimeMs> deadline_tick_;
    int crowd_rotation_ = 0;
};

void Simulator::claim(AssignmentId a) {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < workers_.size(); ++i)
        if (!busy(workers_[i].id)) free.push_back(i);
    if (free.empty()) return;
    const std::size_t pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng_)];
    command([&] { engine_.claim_assignment(a, workers_[pick].id, now_); });
}

void Simulator::worker_joined(const WorkerId& w, SessionId s) {
    const auto it = index_.find(w);
    if (it == index_.end()) return;
    const std::size_t i = it->second;
    const AgentProfile& p = *workers_[i].profile;
    at(now_ + uniform_ms(p.first_step_s), [this, i, s] { worker_step(i, s); });
    at(now_ + uniform_ms(p.heartbeat_s), [this, i, s] { worker_heartbeat(i, s); });
}

void Simulator::worker_step(std::size_t i, SessionId s) {
    const WorkerAgent& w = workers_[i];
    command([&] { engine_.tick(now_); });
    observe_events();
    if (!present(w.id, s)) return;
    const auto actions = scripted_step(*w.profile, observe(engine_, s, w.id, now_), rng_);
    for (const auto& a : actions) {
        command([&] {
            switch (a.type) {
                case AgentActionType::Propose: engine_.propose_message(s, w.id, a.body, now_); break;
                case AgentActionType::Vote: engine_.vote_message(s, w.id, a.message, now_); break;
                case AgentActionType::PostFact: engine_.post_fact(s, w.id, a.body, now_); break;
                case AgentActionType::Submit: engine_.submit_hit(s, w.id, now_); break;
            }
        });
        observe_events();
    }
    if (present(w.id, s)) at(now_ + uniform_ms(w.profile->step_s), [this, i, s] { worker_step(i, s); });
}

void Simulator::worker_heartbeat(std::size_t i, SessionId s) {
    const WorkerAgent& w = workers_[i];
    command([&] { engine_.tick(now_); });
    observe_events();
    if (!present(w.id, s)) return;
    const Participant* p = engine_.state().session(s)->participant(w.id);
    // Any recent action already counts as presence.
    if (now_ - p->last_heartbeat >= 15 * kSecond) command([&] { engine_.heartbeat(s, w.id, now_); });
    observe_events();
    if (present(w.id, s)) at(now_ + uniform_ms(w.profile->heartbeat_s), [this, i, s] { worker_heartbeat(i, s); });
}

void Simulator::accrue(SessionId s) {
    command([&] { engine_.tick(now_); });
    const SessionRecord* rec = engine_.state().session(s);
    if (rec == nullptr || !rec->is_open()) return;
    command([&] { engine_.accrue_waiting(s, now_); });
    at(now_ + config_.incentives.waiting_interval, [this, s] { accrue(s); });
}

void Simulator::schedule_deadline(SessionId s) {
    const SessionRecord* rec = engine_.state().session(s);
    if (rec == nullptr || !rec->is_open()) return;
    auto& scheduled = deadline_tick_[s];
    if (scheduled == rec->deadline) return;
    scheduled = rec->deadline;
    at(rec->deadline, [this] { command([&] { engine_.tick(now_); }); });
}

void Simulator::user_says(const UserId& u, const std::string& body) {
    command([&] { engine_.handle_inbound_user_message(u, body, now_); });
}

void Simulator::reactive_open(UserAgent& u) {
    if (now_ > sc_.duration) return;
    u.talking = true;
    u.reply_scheduled = false;
    ++u.conversation;
    u.turns_left = u.script->reactive->turns;
    const auto& pool = openers();
    user_says(u.script->user_id, pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng_)]);
}

void Simulator::reactive_reply(UserAgent& u) {
    u.reply_scheduled = false;
    if (!u.talking) return;
    const ReactiveUser& r = *u.script->reactive;
    if (u.turns_left > 0) {
        --u.turns_left;
        const auto& pool = follow_ups();
        user_says(u.script->user_id, pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng_)]);
        return;
    }
    user_says(u.script->user_id, r.closing);
    leave(u);
}

void Simulator::leave(UserAgent& u) {
    const ReactiveUser& r = *u.script->reactive;
    u.talking = false;
    if (--u.sessions_left > 0) {
        const double gap_min = std::uniform_real_distribution<double>(r.return_gap_min.lo, r.return_gap_min.hi)(rng_);
        UserAgent* agent = &u;
        at(now_ + static_cast<TimeMs>(std::llround(gap_min * kMinute)), [this, agent] { reactive_open(*agent); });
    }
}

void Simulator::crowd_line(const UserId& u, const CrowdLine& line, int attempt) {
    command([&] { engine_.tick(now_); });
    observe_events();
    const auto open = engine_.state().open_session_by_user.find(u);
    if (open == engine_.state().open_session_by_user.end()) return;
    const SessionId s = open->second;
    const SessionRecord& rec = *engine_.state().session(s);
    std::vector<WorkerId> crowd;
    for (const auto& p : rec.participants)
        if (p.present()) crowd.push_back(p.worker_id);
    // Nobody to say it yet, or too few to leave a proposal unaccepted: try again shortly.
    const std::size_t needed = line.accept ? 1 : 3;
    if (crowd.size() < needed || engine_.active_count(s, now_) < static_cast<int>(needed)) {
        if (attempt < 120) at(now_ + 5 * kSecond, [this, u, line, attempt] { crowd_line(u, line, attempt + 1); });
        return;
    }
    const std::size_t first = static_cast<std::size_t>(crowd_rotation_++) % crowd.size();
    std::optional<MessageId> mid;
    command([&] { mid = engine_.propose_message(s, crowd[first], line.body, now_).message_id; });
    observe_events();
    if (!mid || !line.accept) return;
    for (std::size_t k = 1; k < crowd.size(); ++k) {
        const ChatMessage* m = engine_.state().message(*mid);
        if (m == nullptr || m->status != MessageStatus::Pending) break;
        command([&] { engine_.vote_message(s, crowd[(first + k) % crowd.size()], *mid, now_); });
        observe_events();
    }
}

void Simulator::observe_events() {
    while (!fresh_.empty()) {
        std::vector<EventLogEntry> batch;
        batch.swap(fresh_);
        for (const auto& e : batch) {
            const json& p = e.payload;
            switch (e.kind) {
                case EventKind::SessionOpened: {
                    const SessionId s = *e.session_id;
                    schedule_deadline(s);
                    at(e.at + config_.incentives.waiting_interval, [this, s] { accrue(s); });
                    break;
                }
                case EventKind::UserMessage:
                case EventKind::MessageAccepted:
                    if (e.session_id) schedule_deadline(*e.session_id);
                    break;
                case EventKind::MessageDelivered: {
                    const auto it = users_.find(p.at("user_id").get<UserId>());
                    if (it == users_.end() || !it->second.script->reactive) break;
                    UserAgent& u = it->second;
                    if (!u.talking || u.reply_scheduled) break;
                    u.reply_scheduled = true;
                    UserAgent* agent = &u;
                    at(e.at + uniform_ms(u.script->reactive->reply_delay_s),
                       [this, agent, conv = u.conversation] {
                           if (agent->conversation == conv) reactive_reply(*agent);
                       });
                    break;
                }
                case EventKind::SessionClosed: {
                    const SessionRecord& rec = *engine_.state().session(*e.session_id);
                    if (const auto it = users_.find(rec.user_id); it != users_.end()) {
                        UserAgent& u = it->second;
                        u.reply_scheduled = false;
                        // The conversation ended under a user still talking: they come back later.
                        if (u.talking && u.script->reactive) leave(u);
                    }
                    deadline_tick_.erase(*e.session_id);
                    break;
                }
                case EventKind::AssignmentClaimed:
                    if (p.at("joins") == "conversation")
                        worker_joined(p.at("worker_id").get<WorkerId>(), *e.session_id);
                    break;
                case EventKind::RetainerDispatched:
                    worker_joined(p.at("worker_id").get<WorkerId>(), *e.session_id);
                    break;
                case EventKind::RetainerEntered: {
                    const TimeMs expires = p.at("expires_at").get<TimeMs>();
                    if (p.at("worker_id").is_null())
                        platform_.offer_slot(AssignmentId{p.at("assignment_id").get<std::uint64_t>()}, e.at, expires);
                    at(expires, [this] { command([&] { engine_.tick(now_); }); });
                    break;
                }
                case EventKind::RetainerPinged: {
                    const WorkerId w = p.at("worker_id").get<WorkerId>();
                    at(e.at + config_.recruiting.dispatch_promise + 1, [this] { command([&] { engine_.tick(now_); }); });
                    const auto it = index_.find(w);
                    if (it == index_.end()) break;
                    const AgentProfile& prof = *workers_[it->second].profile;
                    if (std::bernoulli_distribution(prof.ping_miss_p)(rng_)) break;
                    at(e.at + uniform_ms(prof.ping_response_s),
                       [this, w] { command([&] { engine_.respond_to_ping(w, now_); }); });
                    break;
                }
                default: break;
            }
        }
    }
}

RunResult Simulator::run() {
    for (const auto& u : sc_.users) {
        UserAgent& agent = users_[u.user_id];
        agent.script = &u;
        for (const auto& m : u.messages)
            if (m.at <= sc_.duration) at(m.at, [this, id = u.user_id, body = m.body] { user_says(id, body); });
        for (const auto& c : u.crowd_lines)
            at(c.at, [this, id = u.user_id, line = c] { crowd_line(id, line, 0); });
        if (u.reactive) {
            agent.sessions_left = u.reactive->sessions;
            UserAgent* ptr = &agent;
            at(u.reactive->start, [this, ptr] { reactive_open(*ptr); });
        }
    }
    for (const auto& a : sc_.admin_actions)
        at(a.at, [this, a] {
            command([&] {
                if (a.type == AdminActionType::Block)
                    engine_.block_user(a.user_id, a.reason, config_.gateway.admin_token, now_);
                else
                    engine_.unblock_user(a.user_id, config_.gateway.admin_token, now_);
            });
        });

    const TimeMs hard_stop = sc_.duration + 24 * kHour;
    while (!queue_.empty()) {
        Item item = queue_.top();
        queue_.pop();
        if (item.at > hard_stop) break;
        now_ = item.at;
        item.fn();
        observe_events();
    }

    RunResult r;
    r.config = config_;
    r.final_state = engine_.state();
    r.log = engine_.log();
    r.summary.scenario = sc_.name;
    r.summary.seed = seed_;
    r.summary.events = r.log.size();
    r.summary.ended_at = r.log.empty() ? 0 : r.log.back().at;
    r.summary.sessions = session_statistics(r.log.entries());
    const int days = static_cast<int>(std::max<TimeMs>(1, (sc_.duration + 24 * kHour - 1) / (24 * kHour)));
    r.summary.cost = deployment_cost_summary(r.log.entries(), days, config_);
    for (const auto& w : workers_) {
        const Behavior b = w.profile->behavior;
        if (b == Behavior::SpammerMessage || b == Behavior::SpammerFact || b == Behavior::SpammerVote)
            r.summary.planted_spammers.push_back(w.id);
    }
    return r;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed_override) {
    try {
        merge_config(Config{}, scenario.config_overrides);
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidScenario, std::string("config: ") + e.what());
    }
    Simulator sim(scenario, seed_override.value_or(scenario.seed));
    return sim.run();
}

void to_json(json& j, const RunSummary& s) {
    j = json{{"scenario", s.scenario},
             {"seed", s.seed},
             {"events", s.events},
             {"ended_at", s.ended_at},
             {"sessions", s.sessions},
             {"cost", s.cost},
             {"planted_spammers", s.planted_spammers}};
}

}  // namespace chorus
