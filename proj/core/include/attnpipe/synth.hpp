#pragma once

// Deterministic synthetic session generator driven by a declarative script.
//
// Script document:
//   {"subject":"s01","duration_s":500,"fps":30,"window_s":5,
//    "identity_every_s":5,"observed":true,
//    "baseline":{"bpm":6,"db":45,"emotion":"neutral","fidget":0},
//    "spans":[{"type":"blink","start":0,"end":60,"bpm":36},
//             {"type":"closure","start":100,"duration":2.5},
//             {"type":"gaze_away","start":..,"end":..},
//             {"type":"emotion","start":..,"end":..,"label":"sad"},
//             {"type":"fidget","start":..,"end":..,"level":0.3},
//             {"type":"noise","start":..,"end":..,"db":80},
//             {"type":"proxy","start":..,"end":..}]}

#include "attnpipe/model.hpp"
#include "attnpipe/session_io.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace attnpipe {

enum class SpanType : std::uint8_t { Blink, Closure, GazeAway, Emotion, Fidget, Noise, Proxy };

struct ScriptSpan {
    SpanType type = SpanType::Blink;
    double start = 0.0;
    double end = 0.0;
    double bpm = 0.0;     // Blink
    double db = 0.0;      // Noise
    double level = 0.0;   // Fidget: torso-normalized displacement per frame
    EmotionLabel label = EmotionLabel::Neutral;
};

struct ScriptBaseline {
    double bpm = 6.0;
    double db = 45.0;
    EmotionLabel emotion = EmotionLabel::Neutral;
    double fidget = 0.0;
};

struct ScenarioScript {
    std::string subject = "subject";
    double duration_s = 60.0;
    double fps = 30.0;
    double window_s = 5.0;
    double identity_every_s = 5.0;  // 0 disables identity events
    bool observed = true;
    ScriptBaseline baseline;
    std::vector<ScriptSpan> spans;

    /// Throws ConfigError naming the offending span index.
    void validate() const;
};

ScenarioScript script_from_json(std::string_view text);
ScenarioScript load_script(const std::string& path);

struct SynthResult {
    Session session;
    /// Attention implied by the script per window, on a 0..100 scale.
    std::map<WindowIndex, double> ground_truth;
};

/// Same (script, seed, cfg) always yields a byte-identical session.
SynthResult synthesize(const ScenarioScript& script, std::uint64_t seed, const Config& cfg = {});

/// Duration of an eye blink in synthetic sessions.
inline constexpr double kSynthBlinkSeconds = 0.15;
/// EAR of open and closed eyes in synthetic landmarks.
inline constexpr double kSynthOpenEar = 0.30;
inline constexpr double kSynthClosedEar = 0.05;

} // namespace attnpipe
