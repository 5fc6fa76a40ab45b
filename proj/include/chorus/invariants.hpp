#pragma once

#include <span>
#include <string>
#include <vector>

#include "chorus/config.hpp"
#include "chorus/events.hpp"

namespace chorus {

/// Re-derives the protocol rules from a log alone, without the engine, and reports
/// every violation it finds. An empty result means the log is sound.
///
/// Checked: contiguous seq from 1 and non-decreasing time; votes only on pending
/// proposals and never twice; acceptance exactly when votes reach the threshold;
/// exactly-once delivery of every accepted proposal; no worker activity after
/// closure; timeouts never before the recomputed deadline and nothing else in a
/// session at or after it; voluntary submissions only
/// at or above the minimum, closure on the second; one bonus settlement per closed
/// session matching the points; legal assignment transitions; no worker in two
/// conversations at once; retainer entries and slots never outliving 30 minutes;
/// dispatch conservation; nothing in a blocked user's sessions after the block.
std::vector<std::string> check_invariants(std::span<const EventLogEntry> log, const Config& config = {});

}  // namespace chorus
