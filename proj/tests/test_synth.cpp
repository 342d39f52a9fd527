#include "attnpipe/errors.hpp"
#include "attnpipe/ocular.hpp"
#include "attnpipe/pipeline.hpp"
#include "attnpipe/synth.hpp"

#include "oracles.hpp"

#include "doctest.h"

using namespace attnpipe;

namespace {

std::vector<oracle::Frame> eye_frames(const Session& s, const Config& cfg) {
    std::vector<oracle::Frame> frames;
    for (const auto& r : s.records) {
        if (r.kind() != RecordKind::Landmarks) continue;
        auto eyes = eyes_from_landmarks(std::get<LandmarksPayload>(r.payload));
        frames.push_back({r.t, *eye_state(eyes.left, eyes.right, cfg) == EyeState::Closed});
    }
    return frames;
}

} // namespace

TEST_CASE("same script and seed give identical bytes") {
    auto script = script_from_json(R"({"subject":"a","duration_s":30,
        "spans":[{"type":"closure","start":3,"duration":2.5},{"type":"noise","start":10,"end":20,"db":70},
                 {"type":"emotion","start":5,"end":9,"label":"sad"},{"type":"fidget","start":0,"end":30,"level":0.1}]})");
    auto a = serialize_session(synthesize(script, 99).session);
    auto b = serialize_session(synthesize(script, 99).session);
    CHECK(a == b);
    CHECK(a != serialize_session(synthesize(script, 100).session));
}

TEST_CASE("empty script") {
    ScenarioScript s;
    s.duration_s = 10.0;
    auto res = synthesize(s, 1);
    std::map<RecordKind, std::size_t> counts;
    for (const auto& r : res.session.records) ++counts[r.kind()];
    CHECK(counts[RecordKind::Landmarks] == 300);
    CHECK(counts[RecordKind::Pupils] == 300);
    CHECK(counts[RecordKind::Pose] == 300);
    CHECK(counts[RecordKind::Emotion] == 300);
    CHECK(counts[RecordKind::Audio] == 300);
    CHECK(counts[RecordKind::Identity] == 2);
    CHECK(counts[RecordKind::Observed] == 2);
    // The serialized form parses back to the same session.
    CHECK(parse_session(serialize_session(res.session), 1.0) == res.session);
}

TEST_CASE("scripted closure is realized frame by frame") {
    Config cfg;
    auto script = script_from_json(R"({"duration_s":30,"spans":[{"type":"closure","start":12,"duration":2.5}]})");
    auto res = synthesize(script, 5);
    for (const auto& f : eye_frames(res.session, cfg)) {
        bool in_closure = f.t >= 12.0 && f.t < 14.5;
        if (f.t >= 11.0 && f.t < 15.0) CHECK(f.closed == in_closure);
        if (in_closure) CHECK(f.closed);
    }
}

TEST_CASE("blink bursts realize the scripted rate") {
    Config cfg;
    auto script = script_from_json(R"({"duration_s":120,"spans":[{"type":"blink","start":0,"end":60,"bpm":36}]})");
    auto res = synthesize(script, 6);
    auto ref = oracle::blinks(eye_frames(res.session, cfg), cfg.drowsiness_seconds, cfg.window.length);
    for (WindowIndex w = 1; w < 12; ++w) CHECK(ref.blinks_by_window[w] == 3);
    for (WindowIndex w = 13; w < 24; ++w) CHECK(ref.blinks_by_window[w] <= 1);

    auto tl = build_timeline(res.session, cfg);
    for (WindowIndex w = 0; w < 12; ++w)
        CHECK(tl.points.at(static_cast<std::size_t>(w)).contributions[channel_slot(ChannelId::Blink)] == 0.0);
}

TEST_CASE("gaze, noise and emotion spans reach the channels") {
    auto script = script_from_json(R"({"duration_s":30,"spans":[
        {"type":"gaze_away","start":5,"end":10},{"type":"noise","start":10,"end":15,"db":150},
        {"type":"emotion","start":15,"end":20,"label":"happy"},{"type":"fidget","start":20,"end":25,"level":0.25}]})");
    auto tl = build_timeline(synthesize(script, 7).session, Config{});
    auto at = [&](std::size_t w, ChannelId c) { return tl.points.at(w).contributions[channel_slot(c)].value(); };
    CHECK(at(1, ChannelId::Gaze) == 0.0);
    CHECK(at(0, ChannelId::Gaze) == 1.0);
    CHECK(at(2, ChannelId::Noise) == doctest::Approx(0.25).epsilon(0.01));
    CHECK(at(3, ChannelId::Emotion) == 1.0);
    CHECK(at(0, ChannelId::Emotion) == 0.9);
    CHECK(at(4, ChannelId::Posture) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("proxy spans produce warnings") {
    auto script = script_from_json(R"({"subject":"s01","duration_s":30,"spans":[{"type":"proxy","start":10,"end":30}]})");
    auto tl = build_timeline(synthesize(script, 8).session, Config{});
    CHECK(tl.attendance.coverage == doctest::Approx(10.0 / 30.0));
    CHECK_FALSE(tl.attendance.present);
    CHECK(tl.attendance.warnings.size() == 4);
}

TEST_CASE("ground truth follows the script") {
    Config cfg;
    auto script = script_from_json(R"({"duration_s":20,"baseline":{"bpm":0,"db":40},
        "spans":[{"type":"gaze_away","start":5,"end":7.5}]})");
    auto res = synthesize(script, 9);
    // blink 1, gaze 1, emotion 0.9, posture 1, noise 1.
    CHECK(res.ground_truth.at(0) == doctest::Approx(98.0));
    CHECK(res.ground_truth.at(1) == doctest::Approx(88.0));
    CHECK(observed_by_window(res.session, cfg.window).at(1) == doctest::Approx(88.0));
}

TEST_CASE("script validation names the span") {
    auto msg = [](const char* text) {
        try {
            script_from_json(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(msg(R"({"duration_s":10,"spans":[{"type":"blink","start":0,"end":5,"bpm":6},
                  {"type":"noise","start":2,"end":4,"db":-3}]})")
              .find("span 1") != std::string::npos);
    CHECK(msg(R"({"duration_s":10,"spans":[{"type":"closure","start":9,"duration":2}]})").find("span 0") !=
          std::string::npos);
    CHECK(msg(R"({"duration_s":10,"spans":[{"type":"wink","start":1,"end":2}]})").find("span 0") !=
          std::string::npos);
    CHECK(msg(R"({"duration_s":10,"spans":[{"type":"blink","start":1,"end":2,"bpm":-1}]})").find("span 0") !=
          std::string::npos);
    CHECK_FALSE(msg(R"({"duration_s":-1})").empty());
    CHECK_THROWS_AS(load_script("/nonexistent/script.json"), IoError);
}
