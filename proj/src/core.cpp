#include "chorus/core.hpp"

#include <cmath>
#include <cstdio>

namespace chorus {

std::string format_dollars(Cents c) {
    const std::int64_t v = c.value < 0 ? -c.value : c.value;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s$%lld.%02lld", c.value < 0 ? "-" : "",
                  static_cast<long long>(v / 100), static_cast<long long>(v % 100));
    return buf;
}

MicroDollars micro_dollars_from(double dollars) {
    return MicroDollars{static_cast<std::int64_t>(std::llround(dollars * 1e6))};
}

Cents cents_from(double dollars) {
    // Go through micro-dollars so that 0.285 (binary 0.28499...) still rounds to 29.
    return Cents{div_round_half_up(micro_dollars_from(dollars).value, 10'000)};
}

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::SessionClosed: return "SessionClosed";
        case ErrorCode::SessionStillOpen: return "SessionStillOpen";
        case ErrorCode::SessionAlreadyOpen: return "SessionAlreadyOpen";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::NotAParticipant: return "NotAParticipant";
        case ErrorCode::EmptyBody: return "EmptyBody";
        case ErrorCode::AlreadyVoted: return "AlreadyVoted";
        case ErrorCode::MessageNotPending: return "MessageNotPending";
        case ErrorCode::UnknownMessage: return "UnknownMessage";
        case ErrorCode::UnknownUser: return "UnknownUser";
        case ErrorCode::UserBlocked: return "UserBlocked";
        case ErrorCode::NotEligible: return "NotEligible";
        case ErrorCode::AlreadyDelivered: return "AlreadyDelivered";
        case ErrorCode::NotAccepted: return "NotAccepted";
        case ErrorCode::Unauthorized: return "Unauthorized";
        case ErrorCode::PlatformUnavailable: return "PlatformUnavailable";
        case ErrorCode::UnknownAssignment: return "UnknownAssignment";
        case ErrorCode::AssignmentUnavailable: return "AssignmentUnavailable";
        case ErrorCode::WorkerBusy: return "WorkerBusy";
        case ErrorCode::NoPendingPing: return "NoPendingPing";
        case ErrorCode::CorruptLog: return "CorruptLog";
        case ErrorCode::InvalidScenario: return "InvalidScenario";
        case ErrorCode::InfeasibleTargets: return "InfeasibleTargets";
        case ErrorCode::NegativeAssignments: return "NegativeAssignments";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::ClockWentBackwards: return "ClockWentBackwards";
    }
    return "Unknown";
}

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace chorus
