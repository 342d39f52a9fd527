#pragma once

// Emotion, posture and background-noise channel scores.

#include "attnpipe/model.hpp"
#include "attnpipe/session_io.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace attnpipe {

double emotion_score(EmotionLabel label, const EmotionTable& table) noexcept;

/// Mean table score over the window's frames; nullopt for an empty window.
std::optional<double> emotion_window_score(std::span<const EmotionLabel> labels, const EmotionTable& table) noexcept;

/// Inference side of a trained one-vs-rest linear classifier. Rows follow
/// the EmotionLabel enumeration order.
struct LinearEmotionModel {
    std::size_t feature_dim = 0;
    std::array<std::vector<double>, kEmotionCount> weights;
    std::array<double, kEmotionCount> bias{};

    /// Throws ConfigError on wrong row length or non-finite entries.
    void validate() const;
};

/// weights * features + bias, one entry per label.
std::array<double, kEmotionCount> emotion_class_scores(std::span<const double> features,
                                                       const LinearEmotionModel& model);

/// Argmax of the class scores; the earliest label wins ties. Throws
/// ConfigError on a feature dimension mismatch.
EmotionLabel classify_emotion(std::span<const double> features, const LinearEmotionModel& model);

/// {"feature_dim":d,"labels":[...7 names...],"weights":[[...]x7],"bias":[...]}
LinearEmotionModel emotion_model_from_json(std::string_view text);
std::string emotion_model_to_json(const LinearEmotionModel& model);
LinearEmotionModel load_emotion_model(const std::filesystem::path& path);

// COCO keypoint order.
namespace pose_kp {
inline constexpr std::size_t kLeftShoulder = 5;
inline constexpr std::size_t kRightShoulder = 6;
inline constexpr std::size_t kLeftHip = 11;
inline constexpr std::size_t kRightHip = 12;
} // namespace pose_kp

struct PoseFrame {
    Timestamp t = 0.0;
    std::array<Keypoint, kPoseKeypointCount> kp{};
};

/// Reference body scale of a frame: shoulder width, else the same-side
/// shoulder-to-hip length. nullopt when no pair is confident enough.
std::optional<double> torso_scale(const PoseFrame& frame, const Config& cfg) noexcept;

/// Mean displacement of keypoints confident in both frames, divided by the
/// torso scale of `cur`. nullopt with too few valid pairs or a zero scale.
/// Throws ContractError unless prev.t < cur.t.
std::optional<double> posture_displacement(const PoseFrame& prev, const PoseFrame& cur, const Config& cfg);

/// clamp_unit(1 - mean / d_max); nullopt for an empty list.
std::optional<double> posture_window_score(std::span<const double> displacements, const Config& cfg);

/// Maps a mean sound level to a score: 1 up to quiet_db, linear down to 0.5
/// at loud_db, then 0.5 * loud_db / mean.
double noise_level_score(double mean_db, const Config& cfg);

/// Window form of the above over raw dB samples; nullopt when empty. Throws
/// DomainError for a non-finite sample.
std::optional<double> noise_score(std::span<const double> samples_db, const Config& cfg);

} // namespace attnpipe
