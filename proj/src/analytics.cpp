#include "chorus/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "chorus/recruiting.hpp"

namespace chorus {

Cents hit_base_cost(int n_assignments, Cents base_pay, const FeeSchedule& fees) {
    if (n_assignments < 0) throw Error(ErrorCode::NegativeAssignments, std::to_string(n_assignments));
    const std::int64_t gross = static_cast<std::int64_t>(n_assignments) * base_pay.value;
    return Cents{div_round_half_up(gross * (100 + fees.percent_for(n_assignments)), 100)};
}

CostReport deployment_cost_summary(std::span<const EventLogEntry> log, int period_days, const Config& config) {
    CostReport r;
    r.period_days = std::max(period_days, 0);
    if (log.empty()) return r;

    std::map<SessionId, std::size_t> line_of_session;
    for (const auto& e : log) {
        if (e.kind == EventKind::HitPosted) {
            HitCost c;
            c.hit_id = HitId{e.payload.at("hit_id").get<std::uint64_t>()};
            c.session_id = e.session_id;
            c.n_assignments = static_cast<int>(e.payload.at("assignment_ids").size());
            const Cents pay{e.payload.at("base_pay_cents").get<std::int64_t>()};
            c.base = Cents{c.n_assignments * pay.value};
            c.base_cost = hit_base_cost(c.n_assignments, pay, config.fees);
            c.fee = c.base_cost - c.base;
            if (e.session_id) line_of_session[*e.session_id] = r.per_hit.size();
            r.per_hit.push_back(c);
        } else if (e.kind == EventKind::BonusSettled && e.session_id) {
            auto it = line_of_session.find(*e.session_id);
            if (it == line_of_session.end()) {
                HitCost c;
                c.session_id = e.session_id;
                it = line_of_session.emplace(*e.session_id, r.per_hit.size()).first;
                r.per_hit.push_back(c);
            }
            HitCost& c = r.per_hit[it->second];
            const Cents bonus{e.payload.at("total_cents").get<std::int64_t>()};
            c.bonus += bonus;
            c.fee += Cents{div_round_half_up(bonus.value * config.fees.bonus_percent, 100)};
        }
    }
    for (auto& c : r.per_hit) {
        c.total = c.base + c.fee + c.bonus;
        r.base += c.base;
        r.fee += c.fee;
        r.bonus += c.bonus;
        r.base_cost += c.base_cost;
        r.grand += c.total;
    }
    const TimeMs first = log.front().at;
    const TimeMs last = log.back().at;
    r.retainer = retainer_pay_owed(retainer_history(log), first, last, config.recruiting, config.fees);
    r.overall = r.grand + r.retainer;
    if (r.period_days == 0) r.period_days = static_cast<int>(std::max<TimeMs>(1, (last - first + 24 * kHour - 1) / (24 * kHour)));
    r.per_day = Cents{div_round_half_up(r.base_cost.value, r.period_days)};
    return r;
}

// ---------------------------------------------------------------------------

int Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0) + overflow; }

namespace {

Histogram histogram(const std::vector<double>& xs, double width, int bins) {
    Histogram h;
    h.bin_width = width;
    h.counts.assign(bins, 0);
    for (double x : xs) {
        const auto i = static_cast<long long>(std::floor(x / width));
        if (i >= bins)
            ++h.overflow;
        else
            ++h.counts[std::max<long long>(i, 0)];
    }
    return h;
}

std::pair<double, double> mean_sd(const std::vector<double>& xs) {
    if (xs.empty()) return {0, 0};
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    if (xs.size() < 2) return {mean, 0};
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (xs.size() - 1))};
}

}  // namespace

double nearest_rank(std::vector<double> sample, double p) {
    if (sample.empty()) return 0;
    std::sort(sample.begin(), sample.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * sample.size()));
    return sample[std::clamp<std::size_t>(rank, 1, sample.size()) - 1];
}

std::vector<SessionFigures> session_figures(std::span<const EventLogEntry> log) {
    struct Acc {
        SessionFigures f;
        std::optional<TimeMs> first_user;
        TimeMs last_chat = 0;
        int proposals = 0;
    };
    std::map<SessionId, Acc> acc;
    for (const auto& e : log) {
        if (!e.session_id) continue;
        switch (e.kind) {
            case EventKind::SessionOpened: {
                Acc& a = acc[*e.session_id];
                a.f.session_id = *e.session_id;
                a.f.created_at = e.at;
                a.last_chat = e.at;
                break;
            }
            case EventKind::UserMessage: {
                if (e.payload.value("dropped", false)) break;
                Acc& a = acc.at(*e.session_id);
                ++a.f.user_messages;
                if (!a.first_user) a.first_user = e.at;
                a.last_chat = e.at;
                break;
            }
            case EventKind::ProposalCreated: ++acc.at(*e.session_id).proposals; break;
            case EventKind::MessageAccepted: {
                Acc& a = acc.at(*e.session_id);
                ++a.f.crowd_messages;
                a.last_chat = e.at;
                if (!a.f.first_response && a.first_user) a.f.first_response = e.at - *a.first_user;
                break;
            }
            default: break;
        }
    }
    std::vector<SessionFigures> out;
    out.reserve(acc.size());
    for (auto& [id, a] : acc) {
        a.f.duration = a.last_chat - a.f.created_at;
        a.f.rejected = a.proposals - a.f.crowd_messages;
        out.push_back(a.f);
    }
    return out;
}

SessionStats session_statistics(std::span<const EventLogEntry> log) {
    const auto figures = session_figures(log);
    SessionStats s;
    s.n_sessions = static_cast<int>(figures.size());
    std::vector<double> dur, msg, user, crowd, rej, lat;
    int short_sessions = 0;
    for (const auto& f : figures) {
        dur.push_back(static_cast<double>(f.duration) / kMinute);
        msg.push_back(f.user_messages + f.crowd_messages);
        user.push_back(f.user_messages);
        crowd.push_back(f.crowd_messages);
        rej.push_back(f.rejected);
        if (f.duration <= 10 * kMinute) ++short_sessions;
        if (f.first_response) lat.push_back(static_cast<double>(*f.first_response) / kSecond);
    }
    std::tie(s.duration_mean, s.duration_sd) = mean_sd(dur);
    std::tie(s.messages_mean, s.messages_sd) = mean_sd(msg);
    std::tie(s.user_messages_mean, s.user_messages_sd) = mean_sd(user);
    std::tie(s.crowd_messages_mean, s.crowd_messages_sd) = mean_sd(crowd);
    std::tie(s.rejected_mean, s.rejected_sd) = mean_sd(rej);
    s.share_at_most_10_min = s.n_sessions ? static_cast<double>(short_sessions) / s.n_sessions : 0;
    s.duration_histogram = histogram(dur, 5, 12);
    s.message_histogram = histogram(msg, 10, 15);
    s.latency_histogram = histogram(lat, 30, 20);

    s.n_with_response = static_cast<int>(lat.size());
    if (!lat.empty()) {
        s.first_response_mean = mean_sd(lat).first;
        for (int p : {10, 25, 50, 60, 75, 90}) s.first_response_quantiles[p] = nearest_rank(lat, p);
        auto share = [&](double limit) {
            return static_cast<double>(std::count_if(lat.begin(), lat.end(), [&](double x) { return x <= limit; })) /
                   lat.size();
        };
        s.within_30s = share(30);
        s.within_60s = share(60);
        s.within_120s = share(120);
    }
    return s;
}

// ---------------------------------------------------------------------------

std::string_view to_string(QualityFlag f) {
    switch (f) {
        case QualityFlag::MessageSpammer: return "message_spammer";
        case QualityFlag::FactSpammer: return "fact_spammer";
        case QualityFlag::VoteSpammer: return "vote_spammer";
    }
    return "unknown";
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 0;
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return static_cast<double>(row[b.size()]) / longest;
}

namespace {

double near_duplicate_share(const std::vector<std::string>& facts, double max_distance) {
    if (facts.empty()) return 0;
    std::map<std::string, int> counts;
    for (const auto& f : facts) ++counts[f];
    std::vector<std::pair<std::string, int>> unique(counts.begin(), counts.end());
    int dup = 0;
    for (std::size_t i = 0; i < unique.size(); ++i) {
        bool near = unique[i].second > 1;
        for (std::size_t j = 0; j < unique.size() && !near; ++j)
            near = i != j && normalized_edit_distance(unique[i].first, unique[j].first) <= max_distance;
        if (near) dup += unique[i].second;
    }
    return static_cast<double>(dup) / facts.size();
}

double median(std::vector<double> xs) {
    if (xs.empty()) return 0;
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2;
}

}  // namespace

std::vector<WorkerQuality> worker_quality(std::span<const EventLogEntry> log, const QualityThresholds& t) {
    struct Acc {
        WorkerQuality q;
        std::vector<std::string> facts;
        TimeMs first_seen = 0, last_seen = 0;
        std::set<SessionId> sessions;
    };
    struct Proposal {
        SessionId session;
        WorkerId author;
        std::set<WorkerId> onlookers;  // present at creation, could have voted
        std::set<WorkerId> voters;
        bool accepted_at_creation = false;
        bool counted = false;
    };
    std::map<WorkerId, Acc> acc;
    std::map<SessionId, std::set<WorkerId>> present;
    std::unordered_map<std::uint64_t, Proposal> proposals;
    std::uint64_t last_proposal = 0;

    auto worker = [&](const WorkerId& w, TimeMs at) -> Acc& {
        auto [it, inserted] = acc.try_emplace(w);
        if (inserted) {
            it->second.q.worker_id = w;
            it->second.first_seen = at;
        }
        it->second.last_seen = at;
        return it->second;
    };
    auto join = [&](const EventLogEntry& e) {
        const WorkerId w = e.payload.at("worker_id").get<WorkerId>();
        present[*e.session_id].insert(w);
        worker(w, e.at).sessions.insert(*e.session_id);
    };

    for (const auto& e : log) {
        switch (e.kind) {
            case EventKind::AssignmentClaimed:
                if (e.payload.at("joins") == "conversation") join(e);
                break;
            case EventKind::RetainerDispatched: join(e); break;
            case EventKind::SubmissionRecorded:
                present[*e.session_id].erase(e.payload.at("worker_id").get<WorkerId>());
                break;
            case EventKind::SessionClosed: present.erase(*e.session_id); break;
            case EventKind::ProposalCreated: {
                const WorkerId w = e.payload.at("worker_id").get<WorkerId>();
                ++worker(w, e.at).q.proposals;
                Proposal p{*e.session_id, w, present[*e.session_id], {}, false, false};
                p.onlookers.erase(w);
                last_proposal = e.payload.at("message_id").get<std::uint64_t>();
                proposals[last_proposal] = std::move(p);
                break;
            }
            case EventKind::MessageAccepted: {
                const auto mid = e.payload.at("message_id").get<std::uint64_t>();
                Proposal& p = proposals.at(mid);
                ++worker(p.author, e.at).q.accepted;
                if (mid == last_proposal && e.payload.at("votes").get<int>() == 1) p.accepted_at_creation = true;
                break;
            }
            case EventKind::VoteCast: {
                const WorkerId w = e.payload.at("worker_id").get<WorkerId>();
                ++worker(w, e.at).q.vote_count;
                proposals.at(e.payload.at("message_id").get<std::uint64_t>()).voters.insert(w);
                break;
            }
            case EventKind::FactPosted: {
                Acc& a = worker(e.payload.at("worker_id").get<WorkerId>(), e.at);
                ++a.q.fact_posts;
                a.facts.push_back(std::string(trim(e.payload.at("body").get<std::string>())));
                break;
            }
            default: break;
        }
    }

    // Vote coverage per (worker, session): pending proposals by others they could have voted on.
    std::map<std::pair<WorkerId, SessionId>, std::pair<int, int>> coverage;  // opportunities, votes
    for (const auto& [mid, p] : proposals) {
        if (p.accepted_at_creation) continue;
        for (const auto& w : p.onlookers) {
            auto& [opportunities, votes] = coverage[{w, p.session}];
            ++opportunities;
            votes += p.voters.contains(w) ? 1 : 0;
        }
    }
    for (const auto& [key, c] : coverage) {
        const auto& [opportunities, votes] = c;
        if (opportunities >= t.min_vote_opportunities &&
            votes >= t.vote_coverage * opportunities)
            ++acc.at(key.first).q.high_coverage_sessions;
    }

    std::vector<WorkerQuality> out;
    for (auto& [w, a] : acc) {
        WorkerQuality& q = a.q;
        q.sessions = static_cast<int>(a.sessions.size());
        if (q.proposals > 0) q.acceptance_ratio = static_cast<double>(q.accepted) / q.proposals;
        q.fact_spam_score = near_duplicate_share(a.facts, t.near_duplicate_distance);
        std::vector<double> lengths;
        for (const auto& f : a.facts) lengths.push_back(static_cast<double>(f.size()));
        q.median_fact_length = median(lengths);
        const double minutes = std::max(1.0, static_cast<double>(a.last_seen - a.first_seen) / kMinute);
        q.vote_rate_per_minute = q.vote_count / minutes;

        if (q.proposals >= t.min_proposals && *q.acceptance_ratio < t.min_acceptance_ratio)
            q.flags.insert(QualityFlag::MessageSpammer);
        if (q.fact_posts >= t.min_facts &&
            (q.fact_spam_score >= t.duplicate_share || q.median_fact_length <= t.max_median_fact_length))
            q.flags.insert(QualityFlag::FactSpammer);
        if (q.high_coverage_sessions >= t.vote_sessions) q.flags.insert(QualityFlag::VoteSpammer);
        out.push_back(std::move(q));
    }
    return out;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const HitCost& c) {
    j = json{{"hit_id", c.hit_id ? json(c.hit_id->value) : json(nullptr)},
             {"session_id", c.session_id ? json(c.session_id->value) : json(nullptr)},
             {"n_assignments", c.n_assignments},
             {"base_cents", c.base},
             {"fee_cents", c.fee},
             {"base_cost_cents", c.base_cost},
             {"bonus_cents", c.bonus},
             {"total_cents", c.total}};
}

void to_json(json& j, const CostReport& r) {
    j = json{{"per_hit", r.per_hit},
             {"totals",
              {{"base_cents", r.base},
               {"fee_cents", r.fee},
               {"base_cost_cents", r.base_cost},
               {"bonus_cents", r.bonus},
               {"grand_cents", r.grand},
               {"retainer_cents", r.retainer},
               {"overall_cents", r.overall}}},
             {"totals_usd",
              {{"base", format_dollars(r.base)},
               {"base_cost", format_dollars(r.base_cost)},
               {"grand", format_dollars(r.grand)},
               {"retainer", format_dollars(r.retainer)},
               {"overall", format_dollars(r.overall)}}},
             {"per_day_cents", r.per_day},
             {"per_day_usd", format_dollars(r.per_day)},
             {"per_day_basis", r.per_day_basis},
             {"period_days", r.period_days}};
}

void to_json(json& j, const Histogram& h) {
    j = json{{"bin_width", h.bin_width}, {"counts", h.counts}, {"overflow", h.overflow}};
}

void to_json(json& j, const SessionStats& s) {
    json q = json::object();
    for (const auto& [p, v] : s.first_response_quantiles) q["p" + std::to_string(p)] = v;
    j = json{{"n_sessions", s.n_sessions},
             {"duration_min", {{"mean", s.duration_mean}, {"sd", s.duration_sd}}},
             {"messages", {{"mean", s.messages_mean}, {"sd", s.messages_sd}}},
             {"user_messages", {{"mean", s.user_messages_mean}, {"sd", s.user_messages_sd}}},
             {"crowd_messages", {{"mean", s.crowd_messages_mean}, {"sd", s.crowd_messages_sd}}},
             {"rejected", {{"mean", s.rejected_mean}, {"sd", s.rejected_sd}}},
             {"share_at_most_10_min", s.share_at_most_10_min},
             {"duration_histogram", s.duration_histogram},
             {"message_histogram", s.message_histogram},
             {"first_response",
              {{"n", s.n_with_response},
               {"mean_s", s.first_response_mean},
               {"quantiles_s", q},
               {"within_30s", s.within_30s},
               {"within_60s", s.within_60s},
               {"within_120s", s.within_120s},
               {"histogram", s.latency_histogram}}}};
}

void to_json(json& j, const WorkerQuality& w) {
    json flags = json::array();
    for (auto f : w.flags) flags.push_back(to_string(f));
    j = json{{"worker_id", w.worker_id},
             {"sessions", w.sessions},
             {"proposals", w.proposals},
             {"accepted", w.accepted},
             {"acceptance_ratio", w.acceptance_ratio ? json(*w.acceptance_ratio) : json(nullptr)},
             {"fact_posts", w.fact_posts},
             {"fact_spam_score", w.fact_spam_score},
             {"median_fact_length", w.median_fact_length},
             {"vote_count", w.vote_count},
             {"vote_rate_per_minute", w.vote_rate_per_minute},
             {"high_coverage_sessions", w.high_coverage_sessions},
             {"flags", flags}};
}

}  // namespace chorus
