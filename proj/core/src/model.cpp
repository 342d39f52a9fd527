#include "attnpipe/model.hpp"

#include "attnpipe/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace attnpipe {

using nlohmann::json;

double distance(Point2D a, Point2D b) noexcept {
    return std::hypot(a.x - b.x, a.y - b.y);
}

WindowIndex window_index(Timestamp t, const WindowSpec& spec) {
    if (!std::isfinite(t)) throw DomainError("window_index: non-finite timestamp");
    if (t < spec.origin) {
        throw DomainError("window_index: timestamp " + std::to_string(t) + " precedes window origin " +
                          std::to_string(spec.origin));
    }
    auto k = static_cast<WindowIndex>(std::floor((t - spec.origin) / spec.length));
    // The division can land one ulp on the wrong side of a boundary; settle
    // on the index whose half-open interval actually contains t.
    if (k > 0 && spec.start(k) > t) --k;
    if (spec.end(k) <= t) ++k;
    return k;
}

double clamp_unit(double x) {
    if (!std::isfinite(x)) throw DomainError("clamp_unit: non-finite value");
    return std::min(std::max(x, 0.0), 1.0);
}

namespace {

constexpr std::array<std::string_view, 6> kChannelNames{"blink", "gaze", "emotion", "posture", "noise", "identity"};
constexpr std::array<std::string_view, kEmotionCount> kEmotionNames{"angry", "disgust", "fear", "happy",
                                                                   "sad",   "surprise", "neutral"};

} // namespace

std::string_view channel_name(ChannelId c) noexcept {
    return kChannelNames[static_cast<std::size_t>(c)];
}

std::optional<ChannelId> channel_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kChannelNames.size(); ++i)
        if (kChannelNames[i] == name) return static_cast<ChannelId>(i);
    return std::nullopt;
}

std::string_view emotion_name(EmotionLabel e) noexcept {
    return kEmotionNames[static_cast<std::size_t>(e)];
}

std::optional<EmotionLabel> emotion_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kEmotionNames.size(); ++i)
        if (kEmotionNames[i] == name) return static_cast<EmotionLabel>(i);
    return std::nullopt;
}

EmotionTable default_emotion_table() noexcept {
    EmotionTable t{};
    t[static_cast<std::size_t>(EmotionLabel::Angry)] = 0.2;
    t[static_cast<std::size_t>(EmotionLabel::Disgust)] = 0.1;
    t[static_cast<std::size_t>(EmotionLabel::Fear)] = 0.2;
    t[static_cast<std::size_t>(EmotionLabel::Happy)] = 1.0;
    t[static_cast<std::size_t>(EmotionLabel::Sad)] = 0.3;
    t[static_cast<std::size_t>(EmotionLabel::Surprise)] = 0.8;
    t[static_cast<std::size_t>(EmotionLabel::Neutral)] = 0.9;
    return t;
}

void Config::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    auto finite = [](double v) { return std::isfinite(v); };

    if (!finite(ear_threshold) || ear_threshold <= 0.0 || ear_threshold >= 1.0)
        fail("ear_threshold must lie in (0,1)");
    if (!finite(drowsiness_seconds) || drowsiness_seconds <= 0.0) fail("drowsiness_seconds must be > 0");
    if (!finite(window.length) || window.length <= 0.0) fail("window.length must be > 0");
    if (!finite(window.origin) || window.origin < 0.0) fail("window.origin must be >= 0");

    const auto& a = blink_anchors;
    if (!(finite(a.bpm_focus) && finite(a.bpm_low_attention)) || a.bpm_focus < 0.0 ||
        !(a.bpm_focus < a.bpm_norm_low && a.bpm_norm_low < a.bpm_norm_high &&
          a.bpm_norm_high < a.bpm_low_attention))
        fail("blink_anchors must be finite, non-negative and strictly increasing");
    if (!finite(a.normal_score) || a.normal_score < 0.0 || a.normal_score > 1.0)
        fail("blink_anchors.normal_score must lie in [0,1]");

    if (!(0.0 < gaze_center_band.low && gaze_center_band.low < gaze_center_band.high &&
          gaze_center_band.high < 1.0))
        fail("gaze_center_band requires 0 < low < high < 1");

    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        double v = emotion_score_table[i];
        if (!finite(v) || v < 0.0 || v > 1.0)
            fail("emotion_score_table." + std::string(kEmotionNames[i]) + " must lie in [0,1]");
    }

    if (!finite(posture.d_max) || posture.d_max <= 0.0) fail("posture.d_max must be > 0");
    if (!finite(posture.min_confidence) || posture.min_confidence < 0.0 || posture.min_confidence > 1.0)
        fail("posture.min_confidence must lie in [0,1]");
    if (posture.min_keypoints < 1 || posture.min_keypoints > 17) fail("posture.min_keypoints must lie in [1,17]");

    if (!finite(noise.quiet_db) || !finite(noise.loud_db) || noise.loud_db <= 0.0 || noise.quiet_db >= noise.loud_db)
        fail("noise requires quiet_db < loud_db and loud_db > 0");

    if (!finite(watermark_skew) || watermark_skew < 0.0) fail("watermark_skew must be >= 0");
    if (!finite(attendance_coverage) || attendance_coverage < 0.0 || attendance_coverage > 1.0)
        fail("attendance_coverage must lie in [0,1]");
    if (fixed_n != 0 && fixed_n != static_cast<int>(kScoringChannels)) fail("fixed_n must be 0 (adaptive) or 5");
    if (!finite(gaze_pairing_max_gap) || gaze_pairing_max_gap < 0.0) fail("gaze_pairing_max_gap must be >= 0");
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("config: " + where + " must be an object");
    std::set<std::string_view> k(known);
    for (const auto& [key, _] : obj.items())
        if (!k.count(key)) throw ConfigError("config: unknown field '" + where + key + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& into, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        into = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: field '" + where + key + "' has the wrong type");
    }
}

} // namespace

Config config_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    reject_unknown(doc,
                   {"ear_threshold", "drowsiness_seconds", "window", "blink_anchors", "gaze_center_band",
                    "emotion_score_table", "posture", "noise", "watermark_skew", "attendance_coverage", "fixed_n",
                    "gaze_pairing_max_gap"},
                   "");

    Config cfg;
    read(doc, "ear_threshold", cfg.ear_threshold, "");
    read(doc, "drowsiness_seconds", cfg.drowsiness_seconds, "");
    read(doc, "watermark_skew", cfg.watermark_skew, "");
    read(doc, "attendance_coverage", cfg.attendance_coverage, "");
    read(doc, "fixed_n", cfg.fixed_n, "");
    read(doc, "gaze_pairing_max_gap", cfg.gaze_pairing_max_gap, "");

    if (auto it = doc.find("window"); it != doc.end()) {
        reject_unknown(*it, {"length", "origin"}, "window.");
        read(*it, "length", cfg.window.length, "window.");
        read(*it, "origin", cfg.window.origin, "window.");
    }
    if (auto it = doc.find("blink_anchors"); it != doc.end()) {
        reject_unknown(*it, {"bpm_focus", "bpm_norm_low", "bpm_norm_high", "bpm_low_attention", "normal_score"},
                       "blink_anchors.");
        auto& a = cfg.blink_anchors;
        read(*it, "bpm_focus", a.bpm_focus, "blink_anchors.");
        read(*it, "bpm_norm_low", a.bpm_norm_low, "blink_anchors.");
        read(*it, "bpm_norm_high", a.bpm_norm_high, "blink_anchors.");
        read(*it, "bpm_low_attention", a.bpm_low_attention, "blink_anchors.");
        read(*it, "normal_score", a.normal_score, "blink_anchors.");
    }
    if (auto it = doc.find("gaze_center_band"); it != doc.end()) {
        reject_unknown(*it, {"low", "high"}, "gaze_center_band.");
        read(*it, "low", cfg.gaze_center_band.low, "gaze_center_band.");
        read(*it, "high", cfg.gaze_center_band.high, "gaze_center_band.");
    }
    if (auto it = doc.find("emotion_score_table"); it != doc.end()) {
        if (!it->is_object()) throw ConfigError("config: emotion_score_table must be an object");
        for (const auto& [key, value] : it->items()) {
            auto label = emotion_from_name(key);
            if (!label) throw ConfigError("config: unknown emotion label '" + key + "'");
            if (!value.is_number()) throw ConfigError("config: emotion_score_table." + key + " must be a number");
            cfg.emotion_score_table[static_cast<std::size_t>(*label)] = value.get<double>();
        }
    }
    if (auto it = doc.find("posture"); it != doc.end()) {
        reject_unknown(*it, {"d_max", "min_confidence", "min_keypoints"}, "posture.");
        read(*it, "d_max", cfg.posture.d_max, "posture.");
        read(*it, "min_confidence", cfg.posture.min_confidence, "posture.");
        read(*it, "min_keypoints", cfg.posture.min_keypoints, "posture.");
    }
    if (auto it = doc.find("noise"); it != doc.end()) {
        reject_unknown(*it, {"quiet_db", "loud_db"}, "noise.");
        read(*it, "quiet_db", cfg.noise.quiet_db, "noise.");
        read(*it, "loud_db", cfg.noise.loud_db, "noise.");
    }

    cfg.validate();
    return cfg;
}

std::string config_to_json(const Config& cfg) {
    json table = json::object();
    for (std::size_t i = 0; i < kEmotionCount; ++i)
        table[std::string(kEmotionNames[i])] = cfg.emotion_score_table[i];

    const auto& a = cfg.blink_anchors;
    json doc = {
        {"ear_threshold", cfg.ear_threshold},
        {"drowsiness_seconds", cfg.drowsiness_seconds},
        {"window", {{"length", cfg.window.length}, {"origin", cfg.window.origin}}},
        {"blink_anchors",
         {{"bpm_focus", a.bpm_focus},
          {"bpm_norm_low", a.bpm_norm_low},
          {"bpm_norm_high", a.bpm_norm_high},
          {"bpm_low_attention", a.bpm_low_attention},
          {"normal_score", a.normal_score}}},
        {"gaze_center_band", {{"low", cfg.gaze_center_band.low}, {"high", cfg.gaze_center_band.high}}},
        {"emotion_score_table", table},
        {"posture",
         {{"d_max", cfg.posture.d_max},
          {"min_confidence", cfg.posture.min_confidence},
          {"min_keypoints", cfg.posture.min_keypoints}}},
        {"noise", {{"quiet_db", cfg.noise.quiet_db}, {"loud_db", cfg.noise.loud_db}}},
        {"watermark_skew", cfg.watermark_skew},
        {"attendance_coverage", cfg.attendance_coverage},
        {"fixed_n", cfg.fixed_n},
        {"gaze_pairing_max_gap", cfg.gaze_pairing_max_gap},
    };
    return doc.dump();
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

} // namespace attnpipe
