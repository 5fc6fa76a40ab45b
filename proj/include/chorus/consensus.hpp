#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chorus/core.hpp"

namespace chorus {

enum class MessageKind { User, WorkerProposal };
enum class MessageStatus { Pending, Accepted, Expired };

std::string_view to_string(MessageKind k);
std::string_view to_string(MessageStatus s);

struct ChatMessage {
    MessageId message_id;
    SessionId session_id;
    std::string author;  // user id or worker id, per kind
    std::string body;
    TimeMs proposed_at = 0;
    MessageKind kind = MessageKind::User;
    std::set<WorkerId> votes;  // proposer's implicit vote always included
    MessageStatus status = MessageStatus::Pending;
    std::optional<TimeMs> accepted_at;

    bool operator==(const ChatMessage&) const = default;
};

struct FactEntry {
    FactId fact_id;
    SessionId session_id;
    WorkerId author;
    std::string body;
    TimeMs posted_at = 0;

    bool operator==(const FactEntry&) const = default;
};

/// Workers "currently on the page": a heartbeat (or any action) within the window.
struct ActiveWorkerRoster {
    SessionId session_id;
    std::map<WorkerId, TimeMs> last_heartbeat;
    TimeMs heartbeat_window = 30 * kSecond;

    int active_count(TimeMs now) const;
    bool is_active(const WorkerId& w, TimeMs now) const;
};

/// Minimum votes for acceptance: max(1, ceil(percent/100 * active_count)).
/// With the default 40% this is 1 for one or two workers, so a lone proposer is accepted.
constexpr int acceptance_threshold(int active_count, int percent = 40) {
    if (active_count <= 0) return 1;
    const long long scaled = static_cast<long long>(active_count) * percent;
    const int votes = static_cast<int>((scaled + 99) / 100);
    return votes < 1 ? 1 : votes;
}

enum class DisplayClass { OtherPending, OwnPendingOrVoted, Accepted };
std::string_view to_string(DisplayClass c);

/// What the viewer sees of a message: accepted is white, own (proposed or voted) brown,
/// everything else orange.
DisplayClass display_class_for(const ChatMessage& m, const WorkerId& viewer);

struct ViewMessage {
    SessionId session_id;
    int index = 0;  // 1-based within its session, for issue reports
    MessageId message_id;
    MessageKind kind = MessageKind::User;
    std::string author;
    std::string body;
    TimeMs at = 0;
    MessageStatus status = MessageStatus::Pending;
    DisplayClass display = DisplayClass::OtherPending;
    int vote_count = 0;

    bool operator==(const ViewMessage&) const = default;
};

struct ViewFact {
    SessionId session_id;
    int index = 0;
    FactId fact_id;
    std::string body;
    TimeMs at = 0;

    bool operator==(const ViewFact&) const = default;
};

/// A session boundary marker between past and current content.
struct Separator {
    SessionId before;  // session whose content precedes the marker in display order
    SessionId after;
    bool operator==(const Separator&) const = default;
};

struct WorkerView {
    SessionId session_id;
    WorkerId worker_id;
    struct ChatItem {
        std::optional<ViewMessage> message;
        std::optional<Separator> separator;
        bool operator==(const ChatItem&) const = default;
    };
    struct FactItem {
        std::optional<ViewFact> fact;
        std::optional<Separator> separator;
        bool operator==(const FactItem&) const = default;
    };
    std::vector<ChatItem> chat;   // chronological, newest at the bottom
    std::vector<FactItem> facts;  // newest first
    int score = 0;

    int chat_separator_count() const;
    int fact_separator_count() const;
    bool operator==(const WorkerView&) const = default;
};

void to_json(json& j, const ChatMessage& m);
void to_json(json& j, const FactEntry& f);
void to_json(json& j, const WorkerView& v);

}  // namespace chorus
