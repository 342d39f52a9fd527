#include "attnpipe/context_signals.hpp"

#include "attnpipe/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace attnpipe {

using nlohmann::json;

double emotion_score(EmotionLabel label, const EmotionTable& table) noexcept {
    return table[static_cast<std::size_t>(label)];
}

std::optional<double> emotion_window_score(std::span<const EmotionLabel> labels, const EmotionTable& table) noexcept {
    if (labels.empty()) return std::nullopt;
    // Count per label first so the mean does not depend on frame order.
    std::array<std::size_t, kEmotionCount> counts{};
    for (auto l : labels) ++counts[static_cast<std::size_t>(l)];
    double sum = 0.0;
    for (std::size_t i = 0; i < kEmotionCount; ++i) sum += static_cast<double>(counts[i]) * table[i];
    return sum / static_cast<double>(labels.size());
}

void LinearEmotionModel::validate() const {
    if (feature_dim == 0) throw ConfigError("emotion model: feature_dim must be > 0");
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        if (weights[i].size() != feature_dim)
            throw ConfigError("emotion model: weight row " + std::to_string(i) + " has " +
                              std::to_string(weights[i].size()) + " entries, expected " +
                              std::to_string(feature_dim));
        for (double w : weights[i])
            if (!std::isfinite(w)) throw ConfigError("emotion model: non-finite weight");
        if (!std::isfinite(bias[i])) throw ConfigError("emotion model: non-finite bias");
    }
}

std::array<double, kEmotionCount> emotion_class_scores(std::span<const double> features,
                                                       const LinearEmotionModel& model) {
    if (features.size() != model.feature_dim)
        throw ConfigError("emotion model: expected " + std::to_string(model.feature_dim) + " features, got " +
                          std::to_string(features.size()));
    std::array<double, kEmotionCount> scores{};
    for (std::size_t c = 0; c < kEmotionCount; ++c) {
        double s = model.bias[c];
        for (std::size_t j = 0; j < features.size(); ++j) s += model.weights[c][j] * features[j];
        scores[c] = s;
    }
    return scores;
}

EmotionLabel classify_emotion(std::span<const double> features, const LinearEmotionModel& model) {
    auto scores = emotion_class_scores(features, model);
    std::size_t best = 0;
    for (std::size_t c = 1; c < kEmotionCount; ++c)
        if (scores[c] > scores[best]) best = c;
    return static_cast<EmotionLabel>(best);
}

LinearEmotionModel emotion_model_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("emotion model: invalid JSON: ") + e.what());
    }
    LinearEmotionModel m;
    try {
        m.feature_dim = doc.at("feature_dim").get<std::size_t>();
        const auto& labels = doc.at("labels");
        if (!labels.is_array() || labels.size() != kEmotionCount)
            throw ConfigError("emotion model: labels must list the 7 emotions");
        for (std::size_t i = 0; i < kEmotionCount; ++i) {
            if (labels[i].get<std::string>() != emotion_name(static_cast<EmotionLabel>(i)))
                throw ConfigError("emotion model: label " + std::to_string(i) + " must be '" +
                                  std::string(emotion_name(static_cast<EmotionLabel>(i))) + "'");
        }
        const auto& weights = doc.at("weights");
        const auto& bias = doc.at("bias");
        if (!weights.is_array() || weights.size() != kEmotionCount)
            throw ConfigError("emotion model: weights must have 7 rows");
        if (!bias.is_array() || bias.size() != kEmotionCount)
            throw ConfigError("emotion model: bias must have 7 entries");
        for (std::size_t i = 0; i < kEmotionCount; ++i) {
            m.weights[i] = weights[i].get<std::vector<double>>();
            m.bias[i] = bias[i].get<double>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("emotion model: ") + e.what());
    }
    m.validate();
    return m;
}

std::string emotion_model_to_json(const LinearEmotionModel& model) {
    json labels = json::array(), weights = json::array(), bias = json::array();
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        labels.push_back(emotion_name(static_cast<EmotionLabel>(i)));
        weights.push_back(model.weights[i]);
        bias.push_back(model.bias[i]);
    }
    return json{{"feature_dim", model.feature_dim}, {"labels", labels}, {"weights", weights}, {"bias", bias}}.dump();
}

LinearEmotionModel load_emotion_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open emotion model: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return emotion_model_from_json(ss.str());
}

std::optional<double> torso_scale(const PoseFrame& f, const Config& cfg) noexcept {
    auto ok = [&](std::size_t i) { return f.kp[i].conf >= cfg.posture.min_confidence; };
    using namespace pose_kp;
    if (ok(kLeftShoulder) && ok(kRightShoulder)) return distance(f.kp[kLeftShoulder].p, f.kp[kRightShoulder].p);
    if (ok(kLeftShoulder) && ok(kLeftHip)) return distance(f.kp[kLeftShoulder].p, f.kp[kLeftHip].p);
    if (ok(kRightShoulder) && ok(kRightHip)) return distance(f.kp[kRightShoulder].p, f.kp[kRightHip].p);
    return std::nullopt;
}

std::optional<double> posture_displacement(const PoseFrame& prev, const PoseFrame& cur, const Config& cfg) {
    if (!(prev.t < cur.t)) throw ContractError("posture_displacement: frames must be strictly increasing in time");
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < kPoseKeypointCount; ++i) {
        if (prev.kp[i].conf < cfg.posture.min_confidence || cur.kp[i].conf < cfg.posture.min_confidence) continue;
        sum += distance(prev.kp[i].p, cur.kp[i].p);
        ++pairs;
    }
    if (pairs < cfg.posture.min_keypoints) return std::nullopt;
    auto scale = torso_scale(cur, cfg);
    if (!scale || !(*scale > 0.0)) return std::nullopt;
    return (sum / pairs) / *scale;
}

std::optional<double> posture_window_score(std::span<const double> displacements, const Config& cfg) {
    if (displacements.empty()) return std::nullopt;
    double sum = 0.0;
    for (double d : displacements) sum += d;
    return clamp_unit(1.0 - (sum / static_cast<double>(displacements.size())) / cfg.posture.d_max);
}

double noise_level_score(double mean_db, const Config& cfg) {
    if (!std::isfinite(mean_db)) throw DomainError("noise level must be finite");
    const auto& n = cfg.noise;
    if (mean_db <= n.quiet_db) return 1.0;
    if (mean_db <= n.loud_db) return 1.0 - 0.5 * (mean_db - n.quiet_db) / (n.loud_db - n.quiet_db);
    return 0.5 * (n.loud_db / mean_db);
}

std::optional<double> noise_score(std::span<const double> samples_db, const Config& cfg) {
    if (samples_db.empty()) return std::nullopt;
    double sum = 0.0;
    for (double s : samples_db) {
        if (!std::isfinite(s)) throw DomainError("non-finite sound level sample");
        sum += s;
    }
    return noise_level_score(sum / static_cast<double>(samples_db.size()), cfg);
}

} // namespace attnpipe
