#pragma once

// Shared domain types, configuration and window arithmetic.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace attnpipe {

/// Seconds since session start.
using Timestamp = double;

/// Index of a tumbling window, counted from WindowSpec::origin.
using WindowIndex = std::int64_t;

struct Point2D {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2D&, const Point2D&) = default;
};

double distance(Point2D a, Point2D b) noexcept;

/// Half-open tumbling windows [origin + k*length, origin + (k+1)*length).
struct WindowSpec {
    double length = 5.0;
    Timestamp origin = 0.0;

    Timestamp start(WindowIndex k) const noexcept { return origin + static_cast<double>(k) * length; }
    Timestamp end(WindowIndex k) const noexcept { return start(k + 1); }

    friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

/// Throws DomainError when t precedes the origin or is not finite.
WindowIndex window_index(Timestamp t, const WindowSpec& spec);

/// min(max(x,0),1); throws DomainError for NaN/inf.
double clamp_unit(double x);

enum class ChannelId : std::uint8_t { Blink, Gaze, Emotion, Posture, Noise, Identity };

inline constexpr std::size_t kScoringChannels = 5;
inline constexpr std::array<ChannelId, kScoringChannels> kScoringChannelIds{
    ChannelId::Blink, ChannelId::Gaze, ChannelId::Emotion, ChannelId::Posture, ChannelId::Noise};

constexpr bool is_scoring(ChannelId c) noexcept { return c != ChannelId::Identity; }
constexpr std::size_t channel_slot(ChannelId c) noexcept { return static_cast<std::size_t>(c); }
std::string_view channel_name(ChannelId c) noexcept;
std::optional<ChannelId> channel_from_name(std::string_view name) noexcept;

struct ChannelScore {
    WindowIndex window = 0;
    ChannelId channel = ChannelId::Blink;
    double score = 0.0;
};

// Enumeration order is significant: it is the tie-break order of the linear
// emotion classifier and the row order of model files.
enum class EmotionLabel : std::uint8_t { Angry, Disgust, Fear, Happy, Sad, Surprise, Neutral };

inline constexpr std::size_t kEmotionCount = 7;
std::string_view emotion_name(EmotionLabel e) noexcept;
std::optional<EmotionLabel> emotion_from_name(std::string_view name) noexcept;

/// Blink-rate anchors in blinks per minute. `normal_score` is the score at
/// the top of the normal range.
struct BlinkAnchors {
    double bpm_focus = 4.5;
    double bpm_norm_low = 8.0;
    double bpm_norm_high = 21.0;
    double bpm_low_attention = 32.5;
    double normal_score = 0.7;

    friend bool operator==(const BlinkAnchors&, const BlinkAnchors&) = default;
};

struct GazeBand {
    double low = 0.35;
    double high = 0.65;

    friend bool operator==(const GazeBand&, const GazeBand&) = default;
};

struct PostureParams {
    double d_max = 0.5;          // torso-normalized displacement that maps to score 0
    double min_confidence = 0.3;
    int min_keypoints = 5;

    friend bool operator==(const PostureParams&, const PostureParams&) = default;
};

struct NoiseParams {
    double quiet_db = 50.0;
    double loud_db = 75.0;

    friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

using EmotionTable = std::array<double, kEmotionCount>;

/// {angry 0.2, disgust 0.1, fear 0.2, happy 1.0, sad 0.3, surprise 0.8, neutral 0.9}
EmotionTable default_emotion_table() noexcept;

struct Config {
    double ear_threshold = 0.2;
    double drowsiness_seconds = 2.0;
    WindowSpec window{};
    BlinkAnchors blink_anchors{};
    GazeBand gaze_center_band{};
    EmotionTable emotion_score_table = default_emotion_table();
    PostureParams posture{};
    NoiseParams noise{};
    double watermark_skew = 1.0;
    double attendance_coverage = 0.75;
    /// 0 averages the channels present in a window; 5 divides by five and
    /// treats missing channels as 0.
    int fixed_n = 0;
    /// Pupils are paired with the latest landmarks frame no older than this.
    double gaze_pairing_max_gap = 0.5;

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;

    friend bool operator==(const Config&, const Config&) = default;
};

/// Absent fields take defaults; unknown fields are rejected.
Config config_from_json(std::string_view text);
std::string config_to_json(const Config& cfg);
Config load_config(const std::filesystem::path& path);

} // namespace attnpipe
