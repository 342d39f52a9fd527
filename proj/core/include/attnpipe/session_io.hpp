#pragma once

// Session log ingestion, serialization, ordering and replay.
//
// A session log is line-delimited JSON: one header object followed by one
// record object per line. Records may arrive out of timestamp order by at
// most the configured watermark skew.

#include "attnpipe/model.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace attnpipe {

inline constexpr std::string_view kSessionFormat = "attnpipe/1";
inline constexpr std::size_t kLandmarkCount = 68;
inline constexpr std::size_t kPoseKeypointCount = 17;

// Declared in lexicographic order of the wire names so that comparing kinds
// compares names.
enum class RecordKind : std::uint8_t { Audio, Emotion, Identity, Landmarks, Observed, Pose, Pupils };

std::string_view kind_name(RecordKind k) noexcept;
std::optional<RecordKind> kind_from_name(std::string_view name) noexcept;

struct AudioPayload {
    double db = 0.0;
    friend bool operator==(const AudioPayload&, const AudioPayload&) = default;
};

struct EmotionPayload {
    EmotionLabel label = EmotionLabel::Neutral;
    friend bool operator==(const EmotionPayload&, const EmotionPayload&) = default;
};

struct IdentityPayload {
    std::string subject;
    bool verified = false;
    friend bool operator==(const IdentityPayload&, const IdentityPayload&) = default;
};

struct LandmarksPayload {
    std::array<Point2D, kLandmarkCount> pts{};
    friend bool operator==(const LandmarksPayload&, const LandmarksPayload&) = default;
};

struct ObservedPayload {
    double att = 0.0;
    friend bool operator==(const ObservedPayload&, const ObservedPayload&) = default;
};

struct Keypoint {
    Point2D p;
    double conf = 0.0;
    friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct PosePayload {
    std::array<Keypoint, kPoseKeypointCount> kp{};
    friend bool operator==(const PosePayload&, const PosePayload&) = default;
};

struct PupilsPayload {
    std::optional<Point2D> left;
    std::optional<Point2D> right;
    friend bool operator==(const PupilsPayload&, const PupilsPayload&) = default;
};

// Alternative index == RecordKind value.
using Payload = std::variant<AudioPayload, EmotionPayload, IdentityPayload, LandmarksPayload, ObservedPayload,
                             PosePayload, PupilsPayload>;

struct FeatureRecord {
    Timestamp t = 0.0;
    Payload payload;

    RecordKind kind() const noexcept { return static_cast<RecordKind>(payload.index()); }

    friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct SessionMeta {
    std::string subject;
    double duration_s = 0.0;  // 0 when unknown; the stream end stands in
    friend bool operator==(const SessionMeta&, const SessionMeta&) = default;
};

struct Session {
    SessionMeta meta;
    std::vector<FeatureRecord> records;  // sorted by (t, kind), stable in input order
    friend bool operator==(const Session&, const Session&) = default;
};

/// Canonical record order: timestamp, then kind name. Ties beyond that keep
/// arrival order (callers use a stable sort or a sequence number).
inline bool record_before(const FeatureRecord& a, const FeatureRecord& b) noexcept {
    if (a.t != b.t) return a.t < b.t;
    return a.kind() < b.kind();
}

SessionMeta parse_header_line(std::string_view line, std::size_t line_no = 1);
FeatureRecord parse_record_line(std::string_view line, std::size_t line_no);
std::string serialize_header(const SessionMeta& meta);
std::string serialize_record(const FeatureRecord& rec);

/// Reads a whole log. Throws ParseError with the offending line number.
Session parse_session(std::istream& in, double watermark_skew);
Session parse_session(std::string_view text, double watermark_skew);
Session load_session(const std::string& path, double watermark_skew);

void write_session(std::ostream& out, const Session& session);
std::string serialize_session(const Session& session);

/// max seen timestamp minus the allowed skew.
constexpr Timestamp watermark(Timestamp max_seen, double skew) noexcept { return max_seen - skew; }

/// A window may be finalized once the watermark reaches its end.
bool window_finalizable(WindowIndex k, const WindowSpec& spec, Timestamp wm) noexcept;

/// Restores canonical order for a stream that is disordered by at most
/// `skew` seconds. Records are released once they fall strictly below the
/// watermark; drain() releases everything at end of stream.
class ReorderBuffer {
public:
    explicit ReorderBuffer(double skew) : skew_(skew) {}

    /// Throws ContractError when the record is older than the watermark.
    void push(FeatureRecord rec);

    std::optional<Timestamp> max_seen() const noexcept { return max_seen_; }
    std::optional<Timestamp> watermark() const noexcept;
    std::size_t pending() const noexcept { return heap_.size(); }

    template <typename Sink>
    void release(Sink&& sink) {
        auto wm = watermark();
        if (!wm) return;
        while (!heap_.empty() && heap_.front().rec.t < *wm) pop_into(sink);
    }

    template <typename Sink>
    void drain(Sink&& sink) {
        while (!heap_.empty()) pop_into(sink);
    }

private:
    struct Entry {
        FeatureRecord rec;
        std::uint64_t seq;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const noexcept {
            if (record_before(a.rec, b.rec)) return false;
            if (record_before(b.rec, a.rec)) return true;
            return a.seq > b.seq;
        }
    };

    template <typename Sink>
    void pop_into(Sink& sink) {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        FeatureRecord rec = std::move(heap_.back().rec);
        heap_.pop_back();
        sink(std::move(rec));
    }

    double skew_;
    std::optional<Timestamp> max_seen_;
    std::uint64_t next_seq_ = 0;
    std::vector<Entry> heap_;  // min-heap under Later
};

/// Pluggable producer of records. Live capture front-ends implement this;
/// the engine only depends on the interface.
class RecordSource {
public:
    virtual ~RecordSource() = default;
    virtual const SessionMeta& meta() const = 0;
    /// Blocks until the next record is due; nullopt at end of stream.
    virtual std::optional<FeatureRecord> next() = 0;
};

inline constexpr double kBatchSpeed = std::numeric_limits<double>::infinity();

/// Parses "max"/"inf" as batch mode, otherwise a positive multiplier.
double parse_speed(std::string_view text);

/// Replays a parsed session so that wall-clock spacing is dt/speed. With
/// speed = kBatchSpeed records are returned immediately.
class ReplaySource final : public RecordSource {
public:
    ReplaySource(const Session& session, double speed);

    const SessionMeta& meta() const override { return session_.meta; }
    std::optional<FeatureRecord> next() override;

private:
    const Session& session_;
    double speed_;
    std::size_t pos_ = 0;
    std::optional<std::chrono::steady_clock::time_point> start_;
};

/// Streams records straight from a log without loading it whole. Throws
/// ParseError as malformed lines are reached.
class LineStreamSource final : public RecordSource {
public:
    explicit LineStreamSource(std::istream& in);

    const SessionMeta& meta() const override { return meta_; }
    std::optional<FeatureRecord> next() override;

private:
    std::istream& in_;
    SessionMeta meta_;
    std::size_t line_no_ = 1;
};

/// Convenience wrapper over ReplaySource.
void replay(const Session& session, double speed, const std::function<void(const FeatureRecord&)>& sink);

} // namespace attnpipe
