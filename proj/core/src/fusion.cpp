#include "attnpipe/fusion.hpp"

#include "attnpipe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace attnpipe {

std::optional<AttentionPoint> fuse(const WindowScores& scores, WindowIndex window, int fixed_n) {
    std::array<double, kScoringChannels> present{};
    std::size_t n = 0;
    for (std::size_t i = 0; i < kScoringChannels; ++i) {
        if (!scores[i]) continue;
        double s = *scores[i];
        if (!(s >= 0.0 && s <= 1.0)) {
            throw ContractError("fuse: " + std::string(channel_name(static_cast<ChannelId>(i))) + " score " +
                                std::to_string(s) + " is outside [0,1]");
        }
        present[n++] = s;
    }
    if (n == 0) return std::nullopt;

    // Summing the sorted values in extended precision makes the result
    // independent of which channel carries which value, and exact for the
    // small sums involved.
    std::sort(present.begin(), present.begin() + static_cast<std::ptrdiff_t>(n));
    long double sum = 0.0L;
    for (std::size_t i = 0; i < n; ++i) sum += present[i];

    int divisor = fixed_n > 0 ? fixed_n : static_cast<int>(n);
    AttentionPoint p;
    p.window = window;
    p.att = static_cast<double>(100.0L * sum / static_cast<long double>(divisor));
    p.contributions = scores;
    p.n = divisor;
    return p;
}

std::optional<AttentionPoint> fuse(std::span<const ChannelScore> scores, int fixed_n) {
    WindowScores slots{};
    std::optional<WindowIndex> window;
    for (const auto& cs : scores) {
        if (!is_scoring(cs.channel)) throw ContractError("fuse: identity channel cannot contribute to attention");
        if (window && *window != cs.window) throw ContractError("fuse: scores from different windows");
        window = cs.window;
        auto& slot = slots[channel_slot(cs.channel)];
        if (slot) throw ContractError("fuse: duplicate score for channel " + std::string(channel_name(cs.channel)));
        slot = cs.score;
    }
    return fuse(slots, window.value_or(0), fixed_n);
}

TimelineAssembler::TimelineAssembler(WindowSpec window, int fixed_n, EventSink sink)
    : window_(window), fixed_n_(fixed_n), sink_(std::move(sink)) {}

void TimelineAssembler::report(ChannelId channel, WindowIndex window, std::optional<double> score) {
    if (!is_scoring(channel)) throw ContractError("assembler: identity is not a scoring channel");
    if (window < next_emit_) throw ContractError("assembler: window reported after emission");
    Slot& slot = slots_[window];
    std::size_t i = channel_slot(channel);
    if (slot.reported[i]) throw ContractError("assembler: channel reported a window twice");
    slot.reported[i] = true;
    slot.scores[i] = score;
    ++slot.count;
    drain_ready();
}

void TimelineAssembler::alert(const AlertEvent& a) {
    pending_alerts_.push_back(a);
}

void TimelineAssembler::alert_closed(Timestamp closed_since, double duration) {
    for (auto* list : {&alerts_, &pending_alerts_})
        for (auto& a : *list)
            if (a.closed_since == closed_since) a.duration = duration;
}

void TimelineAssembler::flush_alerts_before(Timestamp end) {
    std::stable_sort(pending_alerts_.begin(), pending_alerts_.end(),
                     [](const AlertEvent& a, const AlertEvent& b) { return a.t < b.t; });
    auto it = pending_alerts_.begin();
    for (; it != pending_alerts_.end() && it->t < end; ++it) {
        alerts_.push_back(*it);
        if (sink_) sink_(*it);
    }
    pending_alerts_.erase(pending_alerts_.begin(), it);
}

void TimelineAssembler::drain_ready() {
    for (auto it = slots_.find(next_emit_); it != slots_.end() && it->second.count == kScoringChannels;
         it = slots_.find(next_emit_)) {
        flush_alerts_before(window_.end(next_emit_));
        if (auto p = fuse(it->second.scores, next_emit_, fixed_n_)) {
            p->partial = session_end_ && window_.end(next_emit_) > *session_end_;
            points_.push_back(*p);
            if (sink_) sink_(*p);
        }
        slots_.erase(it);
        ++next_emit_;
    }
}

void TimelineAssembler::finish() {
    flush_alerts_before(std::numeric_limits<double>::infinity());
}

AttendanceLedger attendance(std::span<const IdentityEvent> events, const std::string& subject,
                            double session_duration, const Config& cfg) {
    std::vector<IdentityEvent> sorted(events.begin(), events.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const IdentityEvent& a, const IdentityEvent& b) { return a.t < b.t; });

    AttendanceLedger ledger;
    ledger.subject = subject;
    std::optional<Interval> open;

    auto close = [&](Timestamp at) {
        if (!open) return;
        open->end = std::min(open->end, at);
        if (open->end > open->start) ledger.verified_intervals.push_back(*open);
        open.reset();
    };

    for (const auto& e : sorted) {
        if (e.subject != subject) ledger.warnings.push_back({e.t, e.subject});
        if (!e.verified || e.subject != subject) {
            close(e.t);
            continue;
        }
        Timestamp expiry = e.t + cfg.window.length;
        if (open && e.t <= open->end) {
            open->end = std::max(open->end, expiry);
        } else {
            close(e.t);
            open = Interval{e.t, expiry};
        }
    }
    close(std::numeric_limits<double>::infinity());

    double total = 0.0;
    std::vector<Interval> clipped;
    for (auto iv : ledger.verified_intervals) {
        iv.start = std::max(iv.start, 0.0);
        iv.end = std::min(iv.end, session_duration);
        if (iv.end <= iv.start) continue;
        total += iv.end - iv.start;
        clipped.push_back(iv);
    }
    ledger.verified_intervals = std::move(clipped);
    ledger.coverage = session_duration > 0.0 ? std::min(1.0, total / session_duration) : 0.0;
    ledger.present = ledger.coverage >= cfg.attendance_coverage;
    return ledger;
}

} // namespace attnpipe
