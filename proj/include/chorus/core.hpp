#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace chorus {

using json = nlohmann::json;

/// Milliseconds, virtual or wall clock. All protocol durations are exact in this unit.
using TimeMs = std::int64_t;

inline constexpr TimeMs kSecond = 1000;
inline constexpr TimeMs kMinute = 60 * kSecond;
inline constexpr TimeMs kHour = 60 * kMinute;

// Numeric identifier tagged by what it names, so a MessageId never converts to a SessionId.
template <typename Tag>
struct Id {
    std::uint64_t value = 0;

    constexpr Id() = default;
    constexpr explicit Id(std::uint64_t v) : value(v) {}

    constexpr bool valid() const { return value != 0; }
    auto operator<=>(const Id&) const = default;
};

template <typename Tag>
void to_json(json& j, const Id<Tag>& id) { j = id.value; }
template <typename Tag>
void from_json(const json& j, Id<Tag>& id) { id.value = j.get<std::uint64_t>(); }

struct SessionTag {};
struct MessageTag {};
struct FactTag {};
struct HitTag {};
struct AssignmentTag {};

using SessionId = Id<SessionTag>;
using MessageId = Id<MessageTag>;
using FactId = Id<FactTag>;
using HitId = Id<HitTag>;
using AssignmentId = Id<AssignmentTag>;

// Users and workers are named by the outside world (chat handles, platform worker ids).
using UserId = std::string;
using WorkerId = std::string;

/// Exact money in integer cents.
struct Cents {
    std::int64_t value = 0;

    constexpr Cents() = default;
    constexpr explicit Cents(std::int64_t v) : value(v) {}

    auto operator<=>(const Cents&) const = default;
    constexpr Cents operator+(Cents o) const { return Cents{value + o.value}; }
    constexpr Cents operator-(Cents o) const { return Cents{value - o.value}; }
    constexpr Cents& operator+=(Cents o) {
        value += o.value;
        return *this;
    }
};

inline void to_json(json& j, const Cents& c) { j = c.value; }
inline void from_json(const json& j, Cents& c) { c.value = j.get<std::int64_t>(); }

/// "$2.80", "-$0.05".
std::string format_dollars(Cents c);

/// Rates finer than a cent (e.g. $0.005 per point) are held in micro-dollars.
struct MicroDollars {
    std::int64_t value = 0;
    auto operator<=>(const MicroDollars&) const = default;
};

/// Dollars as written in config files ("0.005") to micro-dollars, rounded to nearest.
MicroDollars micro_dollars_from(double dollars);
/// Dollars to cents, rounded half-up.
Cents cents_from(double dollars);

/// numerator / denominator rounded half away from zero; denominator > 0.
constexpr std::int64_t div_round_half_up(std::int64_t numerator, std::int64_t denominator) {
    if (numerator >= 0) return (numerator + denominator / 2) / denominator;
    return -((-numerator + denominator / 2) / denominator);
}

enum class ErrorCode {
    SessionClosed,
    SessionStillOpen,
    SessionAlreadyOpen,
    UnknownSession,
    NotAParticipant,
    EmptyBody,
    AlreadyVoted,
    MessageNotPending,
    UnknownMessage,
    UnknownUser,
    UserBlocked,
    NotEligible,
    AlreadyDelivered,
    NotAccepted,
    Unauthorized,
    PlatformUnavailable,
    UnknownAssignment,
    AssignmentUnavailable,
    WorkerBusy,
    NoPendingPing,
    CorruptLog,
    InvalidScenario,
    InfeasibleTargets,
    NegativeAssignments,
    InvalidConfig,
    ClockWentBackwards,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Leading/trailing ASCII whitespace removed.
std::string_view trim(std::string_view s);

}  // namespace chorus

template <typename Tag>
struct std::hash<chorus::Id<Tag>> {
    std::size_t operator()(const chorus::Id<Tag>& id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};
