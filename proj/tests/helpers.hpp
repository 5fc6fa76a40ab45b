#pragma once

#include <string>
#include <vector>

#include "chorus/engine.hpp"
#include "chorus/invariants.hpp"

namespace testing_support {

using namespace chorus;

// An engine over a loopback platform, with shortcuts for the usual setup.
struct World {
    explicit World(Config c = {}) : config(std::move(c)), engine(config, &platform) {}

    Config config;
    LoopbackPlatform platform;
    Engine engine;

    SessionId open(const UserId& user = "user-1", const std::string& body = "hello", TimeMs at = 0) {
        return *engine.handle_inbound_user_message(user, body, at).session_id;
    }

    // Claims the session's unclaimed assignments for workers w1..wn.
    std::vector<WorkerId> join(SessionId s, int n, TimeMs at, const std::string& prefix = "w") {
        std::vector<WorkerId> out;
        const SessionRecord& rec = *engine.state().session(s);
        const HitPosting& hit = engine.state().hits.at(*rec.hit_id);
        int k = 0;
        for (AssignmentId a : hit.assignments) {
            if (k == n) break;
            if (engine.state().assignments.at(a).state != AssignmentState::Unclaimed) continue;
            const WorkerId w = prefix + std::to_string(++k);
            engine.claim_assignment(a, w, at);
            out.push_back(w);
        }
        return out;
    }

    std::vector<std::string> violations() const { return check_invariants(engine.log().entries(), config); }
    bool replay_matches() const { return replay(engine.log().entries()) == engine.state(); }

    int count(EventKind kind) const {
        int n = 0;
        for (const auto& e : engine.log().entries()) n += e.kind == kind;
        return n;
    }
    const EventLogEntry* last(EventKind kind) const {
        const auto entries = engine.log().entries();
        for (auto it = entries.rbegin(); it != entries.rend(); ++it)
            if (it->kind == kind) return &*it;
        return nullptr;
    }
};

template <typename F>
ErrorCode error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::CorruptLog;
}

}  // namespace testing_support
