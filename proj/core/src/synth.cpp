#include "attnpipe/synth.hpp"

#include "attnpipe/context_signals.hpp"
#include "attnpipe/errors.hpp"
#include "attnpipe/ocular.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

namespace attnpipe {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kSpanNames{"blink",  "closure", "gaze_away", "emotion",
                                                     "fidget", "noise",   "proxy"};

std::string span_where(std::size_t i) {
    return "script span " + std::to_string(i) + ": ";
}

// mt19937_64 is fully specified by the standard; the std distributions are
// not, so sampling is done by hand to keep output identical everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double normal(double sigma) {
        if (spare_) {
            double v = *spare_;
            spare_.reset();
            return v * sigma;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        return r * std::cos(2.0 * std::numbers::pi * u2) * sigma;
    }

private:
    std::mt19937_64 eng_;
    std::optional<double> spare_;
};

// `step` is 10^-k; dividing by the integral inverse keeps the result the
// double nearest to the decimal.
double round_to(double v, double step) {
    double inv = std::round(1.0 / step);
    return std::round(v * inv) / inv;
}

const ScriptSpan* active(const ScenarioScript& s, SpanType type, double t) {
    const ScriptSpan* hit = nullptr;
    for (const auto& sp : s.spans)
        if (sp.type == type && sp.start <= t && t < sp.end) hit = &sp;
    return hit;
}

// Time-weighted mean of a piecewise-constant script parameter over [a,b).
template <typename ValueAt>
double time_mean(const ScenarioScript& s, SpanType type, double a, double b, ValueAt value_at) {
    std::vector<double> cuts{a, b};
    for (const auto& sp : s.spans) {
        if (sp.type != type) continue;
        if (sp.start > a && sp.start < b) cuts.push_back(sp.start);
        if (sp.end > a && sp.end < b) cuts.push_back(sp.end);
    }
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double w = cuts[i + 1] - cuts[i];
        if (w <= 0.0) continue;
        acc += w * value_at(active(s, type, 0.5 * (cuts[i] + cuts[i + 1])));
    }
    return acc / (b - a);
}

// Neutral face in image pixels, standard 68-point layout.
std::array<Point2D, kLandmarkCount> face_template() {
    std::array<Point2D, kLandmarkCount> p{};
    for (int i = 0; i <= 16; ++i) {  // jaw
        double a = std::numbers::pi * (static_cast<double>(i) / 16.0);
        p[i] = {320.0 - 110.0 * std::cos(a), 210.0 + 120.0 * std::sin(a)};
    }
    for (int i = 0; i < 5; ++i) {  // brows
        p[17 + i] = {250.0 + 13.0 * i, 180.0 - 4.0 * std::sin(std::numbers::pi * i / 4.0)};
        p[22 + i] = {338.0 + 13.0 * i, 180.0 - 4.0 * std::sin(std::numbers::pi * i / 4.0)};
    }
    for (int i = 0; i < 4; ++i) p[27 + i] = {320.0, 200.0 + 15.0 * i};  // nose bridge
    for (int i = 0; i < 5; ++i) p[31 + i] = {304.0 + 8.0 * i, 262.0};   // nostrils
    for (int i = 0; i < 12; ++i) {                                      // outer lip
        double a = 2.0 * std::numbers::pi * i / 12.0;
        p[48 + i] = {320.0 - 30.0 * std::cos(a), 300.0 + 12.0 * std::sin(a)};
    }
    for (int i = 0; i < 8; ++i) {  // inner lip
        double a = 2.0 * std::numbers::pi * i / 8.0;
        p[60 + i] = {320.0 - 20.0 * std::cos(a), 300.0 + 5.0 * std::sin(a)};
    }
    return p;
}

struct EyeGeometry {
    double outer_x, inner_x, y;
};
constexpr EyeGeometry kLeftEye{265.0, 295.0, 205.0};
constexpr EyeGeometry kRightEye{345.0, 375.0, 205.0};

// Writes p1..p6 of one eye so that its EAR equals `ear` exactly.
void place_eye(std::array<Point2D, kLandmarkCount>& p, std::size_t base, const EyeGeometry& g, double ear) {
    double width = g.inner_x - g.outer_x;
    double half_open = ear * width / 2.0;  // |p2-p6| = 2*half_open, EAR = 4*half_open / (2*width)
    double third = width / 3.0;
    p[base + 0] = {g.outer_x, g.y};
    p[base + 1] = {g.outer_x + third, g.y - half_open};
    p[base + 2] = {g.outer_x + 2 * third, g.y - half_open};
    p[base + 3] = {g.inner_x, g.y};
    p[base + 4] = {g.outer_x + 2 * third, g.y + half_open};
    p[base + 5] = {g.outer_x + third, g.y + half_open};
}

// Seated upper body, COCO order; legs mostly out of frame.
std::array<Keypoint, kPoseKeypointCount> pose_template() {
    return {{{{320, 150}, 0.95}, {{305, 140}, 0.9},  {{335, 140}, 0.9},  {{285, 148}, 0.8},  {{355, 148}, 0.8},
             {{220, 300}, 0.9},  {{420, 300}, 0.9},  {{190, 400}, 0.7},  {{450, 400}, 0.7},  {{230, 470}, 0.6},
             {{410, 470}, 0.6},  {{250, 480}, 0.5},  {{390, 480}, 0.5},  {{250, 600}, 0.1},  {{390, 600}, 0.1},
             {{250, 700}, 0.05}, {{390, 700}, 0.05}}};
}

constexpr double kShoulderWidth = 200.0;

} // namespace

void ScenarioScript::validate() const {
    auto bad = [](const std::string& what) { throw ConfigError(what); };
    if (!std::isfinite(duration_s) || duration_s <= 0.0) bad("script: duration_s must be > 0");
    if (!std::isfinite(fps) || fps <= 0.0 || fps > 1000.0) bad("script: fps must lie in (0,1000]");
    if (!std::isfinite(window_s) || window_s <= 0.0) bad("script: window_s must be > 0");
    if (!std::isfinite(identity_every_s) || identity_every_s < 0.0) bad("script: identity_every_s must be >= 0");
    if (!(baseline.bpm >= 0.0) || !std::isfinite(baseline.bpm)) bad("script: baseline.bpm must be >= 0");
    if (!(baseline.db >= 0.0) || !std::isfinite(baseline.db)) bad("script: baseline.db must be >= 0");
    if (!(baseline.fidget >= 0.0) || !std::isfinite(baseline.fidget)) bad("script: baseline.fidget must be >= 0");
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto& s = spans[i];
        if (!std::isfinite(s.start) || !std::isfinite(s.end) || s.start < 0.0 || s.end <= s.start)
            bad(span_where(i) + "requires 0 <= start < end");
        if (s.end > duration_s) bad(span_where(i) + "ends after the session duration");
        if (s.type == SpanType::Blink && !(s.bpm >= 0.0 && std::isfinite(s.bpm))) bad(span_where(i) + "bpm must be >= 0");
        if (s.type == SpanType::Noise && !(s.db >= 0.0 && std::isfinite(s.db))) bad(span_where(i) + "db must be >= 0");
        if (s.type == SpanType::Fidget && !(s.level >= 0.0 && std::isfinite(s.level)))
            bad(span_where(i) + "level must be >= 0");
    }
}

ScenarioScript script_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("script: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("script: expected a JSON object");

    ScenarioScript s;
    auto num = [](const json& obj, const char* key, double& into, const std::string& where) {
        auto it = obj.find(key);
        if (it == obj.end()) return false;
        if (!it->is_number()) throw ConfigError(where + key + " must be a number");
        into = it->get<double>();
        return true;
    };
    auto label = [](const json& v, const std::string& where) {
        if (!v.is_string()) throw ConfigError(where + "label must be a string");
        auto e = emotion_from_name(v.get<std::string>());
        if (!e) throw ConfigError(where + "unknown emotion '" + v.get<std::string>() + "'");
        return *e;
    };

    if (auto it = doc.find("subject"); it != doc.end()) {
        if (!it->is_string()) throw ConfigError("script: subject must be a string");
        s.subject = it->get<std::string>();
    }
    num(doc, "duration_s", s.duration_s, "script: ");
    num(doc, "fps", s.fps, "script: ");
    num(doc, "window_s", s.window_s, "script: ");
    num(doc, "identity_every_s", s.identity_every_s, "script: ");
    if (auto it = doc.find("observed"); it != doc.end()) {
        if (!it->is_boolean()) throw ConfigError("script: observed must be true or false");
        s.observed = it->get<bool>();
    }
    if (auto it = doc.find("baseline"); it != doc.end()) {
        if (!it->is_object()) throw ConfigError("script: baseline must be an object");
        num(*it, "bpm", s.baseline.bpm, "script: baseline.");
        num(*it, "db", s.baseline.db, "script: baseline.");
        num(*it, "fidget", s.baseline.fidget, "script: baseline.");
        if (auto e = it->find("emotion"); e != it->end()) s.baseline.emotion = label(*e, "script: baseline.");
    }
    if (auto it = doc.find("spans"); it != doc.end()) {
        if (!it->is_array()) throw ConfigError("script: spans must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const json& j = (*it)[i];
            std::string where = span_where(i);
            if (!j.is_object()) throw ConfigError(where + "must be an object");
            auto type_it = j.find("type");
            if (type_it == j.end() || !type_it->is_string()) throw ConfigError(where + "missing type");
            auto name = type_it->get<std::string>();
            auto pos = std::find(kSpanNames.begin(), kSpanNames.end(), name);
            if (pos == kSpanNames.end()) throw ConfigError(where + "unknown type '" + name + "'");

            ScriptSpan sp;
            sp.type = static_cast<SpanType>(pos - kSpanNames.begin());
            if (!num(j, "start", sp.start, where)) throw ConfigError(where + "missing start");
            double duration = 0.0;
            if (num(j, "duration", duration, where)) {
                sp.end = sp.start + duration;
            } else if (!num(j, "end", sp.end, where)) {
                throw ConfigError(where + "needs end or duration");
            }
            switch (sp.type) {
            case SpanType::Blink:
                if (!num(j, "bpm", sp.bpm, where)) throw ConfigError(where + "missing bpm");
                break;
            case SpanType::Noise:
                if (!num(j, "db", sp.db, where)) throw ConfigError(where + "missing db");
                break;
            case SpanType::Fidget:
                if (!num(j, "level", sp.level, where)) throw ConfigError(where + "missing level");
                break;
            case SpanType::Emotion: {
                auto l = j.find("label");
                if (l == j.end()) throw ConfigError(where + "missing label");
                sp.label = label(*l, where);
                break;
            }
            default:
                break;
            }
            s.spans.push_back(sp);
        }
    }
    s.validate();
    return s;
}

ScenarioScript load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open script file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return script_from_json(ss.str());
}

SynthResult synthesize(const ScenarioScript& script, std::uint64_t seed, const Config& cfg) {
    script.validate();
    Rng rng(seed);
    SynthResult out;
    out.session.meta = {script.subject, script.duration_s};
    auto& recs = out.session.records;

    const auto face = face_template();
    const auto body = pose_template();
    constexpr double kLandmarkJitter = 0.15;
    constexpr double kPupilJitter = 0.3;
    constexpr double kPoseJitter = 0.5;
    constexpr double kDbJitter = 1.0;

    auto bpm_at = [&](double t) {
        const auto* sp = active(script, SpanType::Blink, t);
        return sp ? sp->bpm : script.baseline.bpm;
    };
    auto fidget_at = [&](double t) {
        const auto* sp = active(script, SpanType::Fidget, t);
        return sp ? sp->level : script.baseline.fidget;
    };

    // Blinks are dropped next to scripted closures so the two never merge
    // into one longer closed run.
    auto near_closure = [&](double t) {
        for (const auto& sp : script.spans)
            if (sp.type == SpanType::Closure && sp.start - 0.3 <= t && t < sp.end + 0.1) return true;
        return false;
    };

    double phase = 0.0;       // cumulative blinks, a blink fires at each k + 0.5
    double blink_until = -1.0;
    double prev_t = 0.0;
    for (std::uint64_t i = 0;; ++i) {
        double t = round_to(static_cast<double>(i) / script.fps, 1e-6);
        if (t >= script.duration_s) break;

        double before = phase;
        phase += bpm_at(t) / 60.0 * (t - prev_t);
        prev_t = t;
        if (std::floor(before + 0.5) < std::floor(phase + 0.5) && !near_closure(t))
            blink_until = t + kSynthBlinkSeconds;

        bool closure = active(script, SpanType::Closure, t) != nullptr;
        bool closed = closure || t < blink_until;

        // Landmarks
        LandmarksPayload lm;
        lm.pts = face;
        double eye_ear = closed ? kSynthClosedEar : kSynthOpenEar;
        place_eye(lm.pts, 36, kLeftEye, eye_ear);
        place_eye(lm.pts, 42, kRightEye, eye_ear);
        for (auto& p : lm.pts) {
            p.x = round_to(p.x + rng.normal(kLandmarkJitter), 0.01);
            p.y = round_to(p.y + rng.normal(kLandmarkJitter), 0.01);
        }
        recs.push_back({t, lm});

        // Pupils: hidden while the eyes are shut.
        PupilsPayload pupils;
        if (!closed) {
            double r = active(script, SpanType::GazeAway, t) ? 0.1 : 0.5;
            auto pupil = [&](const EyeGeometry& g) {
                return Point2D{round_to(g.outer_x + r * (g.inner_x - g.outer_x) + rng.normal(kPupilJitter), 0.01),
                               round_to(g.y + rng.normal(kPupilJitter), 0.01)};
            };
            pupils.left = pupil(kLeftEye);
            pupils.right = pupil(kRightEye);
        }
        recs.push_back({t, pupils});

        // Pose: alternate between +offset/2 and -offset/2 so consecutive
        // frames differ by exactly `level` shoulder widths.
        PosePayload pose;
        pose.kp = body;
        double half = 0.5 * fidget_at(t) * kShoulderWidth * ((i % 2 == 0) ? 1.0 : -1.0);
        for (auto& k : pose.kp) {
            k.p.x = round_to(k.p.x + half + rng.normal(kPoseJitter), 0.01);
            k.p.y = round_to(k.p.y + rng.normal(kPoseJitter), 0.01);
        }
        recs.push_back({t, pose});

        const auto* emo = active(script, SpanType::Emotion, t);
        recs.push_back({t, EmotionPayload{emo ? emo->label : script.baseline.emotion}});

        const auto* noise = active(script, SpanType::Noise, t);
        double db = (noise ? noise->db : script.baseline.db) + rng.normal(kDbJitter);
        recs.push_back({t, AudioPayload{round_to(std::max(0.0, db), 0.01)}});
    }

    if (script.identity_every_s > 0.0) {
        for (std::uint64_t k = 0;; ++k) {
            double t = round_to(static_cast<double>(k) * script.identity_every_s, 1e-6);
            if (t >= script.duration_s) break;
            bool proxy = active(script, SpanType::Proxy, t) != nullptr;
            recs.push_back({t, IdentityPayload{proxy ? script.subject + "-proxy" : script.subject, true}});
        }
    }

    // Implied attention per window.
    for (std::uint64_t w = 0;; ++w) {
        double a = static_cast<double>(w) * script.window_s;
        if (a >= script.duration_s) break;
        double b = std::min(script.duration_s, a + script.window_s);

        bool drowsy = false;
        for (const auto& sp : script.spans)
            if (sp.type == SpanType::Closure && sp.end - sp.start > cfg.drowsiness_seconds && sp.start < b &&
                sp.end > a)
                drowsy = true;
        double bpm = time_mean(script, SpanType::Blink, a, b,
                               [&](const ScriptSpan* sp) { return sp ? sp->bpm : script.baseline.bpm; });
        double blink = drowsy ? 0.0 : blink_rate_score_bpm(bpm, cfg);
        double gaze = 1.0 - time_mean(script, SpanType::GazeAway, a, b,
                                      [](const ScriptSpan* sp) { return sp ? 1.0 : 0.0; });
        double emotion = time_mean(script, SpanType::Emotion, a, b, [&](const ScriptSpan* sp) {
            return emotion_score(sp ? sp->label : script.baseline.emotion, cfg.emotion_score_table);
        });
        double level = time_mean(script, SpanType::Fidget, a, b,
                                 [&](const ScriptSpan* sp) { return sp ? sp->level : script.baseline.fidget; });
        double posture = clamp_unit(1.0 - level / cfg.posture.d_max);
        double db = time_mean(script, SpanType::Noise, a, b,
                              [&](const ScriptSpan* sp) { return sp ? sp->db : script.baseline.db; });
        double noise = noise_level_score(db, cfg);

        double att = 100.0 * (blink + gaze + emotion + posture + noise) / 5.0;
        out.ground_truth[static_cast<WindowIndex>(w)] = att;
        if (script.observed) {
            double t = round_to(0.5 * (a + b), 1e-6);
            recs.push_back({t, ObservedPayload{std::clamp(att, 0.0, 100.0)}});
        }
    }

    std::stable_sort(recs.begin(), recs.end(), record_before);
    return out;
}

} // namespace attnpipe
