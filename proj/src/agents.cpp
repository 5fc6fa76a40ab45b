#include <algorithm>
#include <cctype>

#include "chorus/simulation.hpp"

namespace chorus {

const std::vector<std::string>& vague_replies() {
    static const std::vector<std::string> pool = {"how are you", "yeah", "yes", "Sure you can", "It suits you best."};
    return pool;
}

const std::vector<std::string>& helpful_replies() {
    static const std::vector<std::string> pool = {
        "Sure, let me look that up for you.",
        "Here is what I found: the place you asked about opens at 9am.",
        "Could you tell me a bit more about what you need?",
        "A good option is the one with the best reviews nearby.",
        "I checked a few sources and they agree on this one.",
        "That should take about twenty minutes by train.",
        "You might also like the other option, it is cheaper.",
        "Let me know which of these works best for you.",
    };
    return pool;
}

const std::vector<std::string>& fact_notes() {
    static const std::vector<std::string> pool = {
        "User is vegetarian",
        "Budget is under fifty dollars",
        "They are traveling with two kids",
        "Looking for something open late tonight",
        "Prefers walking over taking a taxi",
        "Staying near the central train station",
        "Allergic to peanuts, mentioned twice",
        "Wants a quiet place to work with wifi",
        "Birthday present for a ten year old",
        "Needs directions from the north campus",
        "Meeting a friend at seven",
        "Already tried the Italian place on Main",
        "Speaks Spanish better than English",
        "Flight leaves Sunday morning",
        "Has a dog that must come along",
        "Does not own a car",
        "Asked for outdoor seating if possible",
        "Likes science fiction and old westerns",
        "Will pay by card only",
        "Visiting the city for the first time",
        "Interested in free museums",
        "Uses a wheelchair, needs step-free access",
        "Wants to avoid the highway",
        "Cooking dinner for six people",
        "Prefers reviews from locals",
        "Shop must sell running shoes",
        "Hotel check-in is after three",
        "Looking for a gym with a pool",
        "Mentioned a bad experience with ride apps",
        "Gift should be under twenty dollars",
        "The concert starts at eight thirty",
        "Lives in the east side neighborhood",
        "Is a student, discounts matter",
        "Wants sushi but not too expensive",
        "Question is about next Friday, not today",
        "Prefers chains over small diners",
        "Bringing grandparents along",
        "Has only one free hour at lunch",
        "Needs a pharmacy open on Sunday",
        "Would rather take the bus than the metro",
    };
    return pool;
}

AgentProfile profile_defaults(Behavior b) {
    AgentProfile a;
    a.behavior = b;
    a.id_prefix = std::string(to_string(b));
    switch (b) {
        case Behavior::SpammerMessage: a.propose_p = 0.8; break;
        case Behavior::SpammerFact: a.step_s = {3, 8}; break;
        case Behavior::SpammerVote:
            a.vote_p = 1.0;
            a.step_s = {2, 5};
            break;
        case Behavior::Idler: a.submits = false; break;
        default: break;
    }
    return a;
}

Observation observe(const Engine& engine, SessionId session, const WorkerId& worker, TimeMs now) {
    const SessionRecord& s = *engine.state().session(session);
    Observation obs;
    obs.session = session;
    obs.self = worker;
    obs.now = now;
    obs.messages.reserve(s.messages.size());
    for (MessageId m : s.messages) obs.messages.push_back(*engine.state().message(m));
    obs.points = engine.state().points(session, worker);
    obs.min_points = engine.config().incentives.min_points_to_submit;
    obs.last_user_message_at = s.last_user_message_at.value_or(s.created_at);
    return obs;
}

namespace {

bool is_vague(const std::string& body) {
    const auto& v = vague_replies();
    return std::find(v.begin(), v.end(), body) != v.end();
}

bool signals_closure(std::string body) {
    for (auto& c : body) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return body.find("thank") != std::string::npos || body.find("bye") != std::string::npos;
}

template <typename T>
const T& pick(const std::vector<T>& pool, std::mt19937_64& rng) {
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

bool chance(double p, std::mt19937_64& rng) { return p >= 1 || (p > 0 && std::bernoulli_distribution(p)(rng)); }

// Helpful crowds answer the latest user message once, and support each other's answers.
std::vector<AgentAction> helpful_step(const AgentProfile& agent, const Observation& obs, std::mt19937_64& rng) {
    std::vector<AgentAction> out;
    const auto& msgs = obs.messages;
    std::ptrdiff_t last_user = -1;
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(msgs.size()) - 1; i >= 0; --i)
        if (msgs[i].kind == MessageKind::User) {
            last_user = i;
            break;
        }
    if (last_user < 0) return out;

    bool answered = false;
    std::vector<const ChatMessage*> pending;
    bool confirmation_asked = false;
    for (std::size_t i = last_user + 1; i < msgs.size(); ++i) {
        const ChatMessage& m = msgs[i];
        if (m.status == MessageStatus::Accepted) answered = true;
        if (m.status == MessageStatus::Pending && !is_vague(m.body)) pending.push_back(&m);
        if (m.body == kConfirmationQuestion) confirmation_asked = true;
    }

    // A confirmer answers a goodbye by checking whether the user needs anything else.
    const bool confirm =
        agent.behavior == Behavior::Confirmer && signals_closure(msgs[last_user].body) && !confirmation_asked;
    if (!answered) {
        if (pending.empty()) {
            if (chance(agent.propose_p, rng))
                out.push_back({AgentActionType::Propose, confirm ? kConfirmationQuestion : pick(helpful_replies(), rng), {}});
        } else {
            for (const ChatMessage* m : pending) {
                if (m->author == obs.self || m->votes.contains(obs.self)) continue;
                if (chance(agent.vote_p, rng)) out.push_back({AgentActionType::Vote, "", m->message_id});
                break;  // only the earliest candidate
            }
        }
    }
    if (chance(agent.fact_p, rng)) {
        out.push_back({AgentActionType::PostFact, pick(fact_notes(), rng), {}});
    }
    return out;
}

}  // namespace

std::vector<AgentAction> scripted_step(const AgentProfile& agent, const Observation& obs, std::mt19937_64& rng) {
    const bool eligible = obs.points >= obs.min_points;
    if (agent.behavior == Behavior::EarlySubmitter && eligible) return {{AgentActionType::Submit, "", {}}};
    if (agent.behavior != Behavior::Idler && agent.submits && eligible &&
        obs.now - obs.last_user_message_at >= static_cast<TimeMs>(agent.submit_idle_s * kSecond))
        return {{AgentActionType::Submit, "", {}}};

    std::vector<AgentAction> out;
    switch (agent.behavior) {
        case Behavior::Diligent:
        case Behavior::Confirmer:
        case Behavior::EarlySubmitter: return helpful_step(agent, obs, rng);
        case Behavior::SpammerMessage:
            if (chance(agent.propose_p, rng)) out.push_back({AgentActionType::Propose, pick(vague_replies(), rng), {}});
            break;
        case Behavior::SpammerFact:
            // Five "a" for every three "d".
            out.push_back({AgentActionType::PostFact, std::bernoulli_distribution(5.0 / 8.0)(rng) ? "a" : "d", {}});
            break;
        case Behavior::SpammerVote:
            for (const auto& m : obs.messages)
                if (m.status == MessageStatus::Pending && m.author != obs.self && !m.votes.contains(obs.self) &&
                    chance(agent.vote_p, rng))
                    out.push_back({AgentActionType::Vote, "", m.message_id});
            break;
        case Behavior::Idler: break;
    }
    return out;
}

}  // namespace chorus
