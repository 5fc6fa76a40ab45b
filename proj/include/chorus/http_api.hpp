#pragma once

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>

#include "chorus/engine.hpp"

namespace httplib {
class Server;
}

namespace chorus {

/// HTTP status for an engine error code.
int http_status(ErrorCode code);

/// The gateway's network face: HTTP+JSON commands and per-session event streams
/// over one engine. Every request takes the same lock, so commands are applied
/// in a single global order, which is also the log order.
class Service {
public:
    struct Options {
        Config config;
        std::string log_path;          // JSONL; replayed on start, appended to after every event. Empty: memory only.
        std::function<TimeMs()> clock;  // default: wall clock, ms since the Unix epoch
        TimeMs stream_keepalive = 15 * kSecond;
    };

    explicit Service(Options options);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    void mount(httplib::Server& server);

    /// Closes due sessions and expired retainer entries, and accrues waiting points.
    /// The server calls this about once a second; tests call it directly.
    void tick();

    /// Ends open event streams; further stream requests return immediately.
    void shut_down();

    EventLog log_snapshot() const;
    SystemState state_snapshot() const;

private:
    TimeMs now() const;
    void persist(const EventLogEntry& e);

    Options options_;
    mutable std::mutex mu_;
    std::condition_variable changed_;
    Engine engine_;
    std::ofstream out_;
    std::atomic<bool> stopping_{false};
};

}  // namespace chorus
