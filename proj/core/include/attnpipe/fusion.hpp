#pragma once

// Per-window fusion of channel scores, alert bookkeeping and attendance.

#include "attnpipe/model.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace attnpipe {

/// One slot per scoring channel, indexed by channel_slot(); nullopt = absent.
using WindowScores = std::array<std::optional<double>, kScoringChannels>;

struct AttentionPoint {
    WindowIndex window = 0;
    double att = 0.0;
    WindowScores contributions{};
    int n = 0;
    bool partial = false;

    friend bool operator==(const AttentionPoint&, const AttentionPoint&) = default;
};

/// Attention score of one window: 100 * sum / n with n the number of present
/// channels (or 5 when fixed_n is 5). nullopt if no channel is present.
/// Throws ContractError for a score outside [0,1].
std::optional<AttentionPoint> fuse(const WindowScores& scores, WindowIndex window, int fixed_n = 0);

/// Set form. All scores must share one window and name distinct scoring
/// channels.
std::optional<AttentionPoint> fuse(std::span<const ChannelScore> scores, int fixed_n = 0);

enum class AlertKind : std::uint8_t { Drowsiness };

struct AlertEvent {
    Timestamp t = 0.0;             // detection time
    Timestamp closed_since = 0.0;  // start of the eye closure
    double duration = 0.0;         // closure length; final once the run ends
    AlertKind kind = AlertKind::Drowsiness;

    friend bool operator==(const AlertEvent&, const AlertEvent&) = default;
};

using TimelineEvent = std::variant<AttentionPoint, AlertEvent>;
using EventSink = std::function<void(const TimelineEvent&)>;

/// Per-window barrier: a window is emitted once every scoring channel has
/// reported a score or its absence for it. Windows leave in index order;
/// alerts detected before a window's end are emitted ahead of it.
class TimelineAssembler {
public:
    TimelineAssembler(WindowSpec window, int fixed_n, EventSink sink = {});

    /// Channels report consecutive windows starting from 0.
    void report(ChannelId channel, WindowIndex window, std::optional<double> score);
    void alert(const AlertEvent& a);
    /// Final duration of the run that started at `closed_since`.
    void alert_closed(Timestamp closed_since, double duration);

    /// Windows ending after this time are flagged partial.
    void set_session_end(Timestamp end) { session_end_ = end; }

    /// Emits any alerts still pending.
    void finish();

    const std::vector<AttentionPoint>& points() const noexcept { return points_; }
    const std::vector<AlertEvent>& alerts() const noexcept { return alerts_; }

private:
    struct Slot {
        WindowScores scores{};
        std::array<bool, kScoringChannels> reported{};
        std::size_t count = 0;
    };

    void drain_ready();
    void flush_alerts_before(Timestamp end);

    WindowSpec window_;
    int fixed_n_;
    EventSink sink_;
    std::optional<Timestamp> session_end_;
    WindowIndex next_emit_ = 0;
    std::map<WindowIndex, Slot> slots_;
    std::vector<AlertEvent> pending_alerts_;
    std::vector<AttentionPoint> points_;
    std::vector<AlertEvent> alerts_;  // emitted, durations patched by alert_closed
};

struct IdentityEvent {
    Timestamp t = 0.0;
    std::string subject;
    bool verified = false;
};

struct Interval {
    Timestamp start = 0.0;
    Timestamp end = 0.0;  // exclusive
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Verification event whose subject does not match the session (possible proxy).
struct IdentityWarning {
    Timestamp t = 0.0;
    std::string subject;
    friend bool operator==(const IdentityWarning&, const IdentityWarning&) = default;
};

struct AttendanceLedger {
    std::string subject;
    std::vector<Interval> verified_intervals;  // disjoint, sorted, clipped to the session
    double coverage = 0.0;
    bool present = false;
    std::vector<IdentityWarning> warnings;

    friend bool operator==(const AttendanceLedger&, const AttendanceLedger&) = default;
};

/// Each verified event for `subject` keeps the subject verified for one
/// window length; a failed verification closes the open interval early.
AttendanceLedger attendance(std::span<const IdentityEvent> events, const std::string& subject,
                            double session_duration, const Config& cfg);

} // namespace attnpipe
