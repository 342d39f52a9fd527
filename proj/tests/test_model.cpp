#include "attnpipe/errors.hpp"
#include "attnpipe/model.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace attnpipe;

TEST_CASE("window_index examples") {
    WindowSpec w{5.0, 0.0};
    CHECK(window_index(0.0, w) == 0);
    CHECK(window_index(5.0, w) == 1);
    CHECK(window_index(12.3, w) == 2);
    CHECK(window_index(4.999999, w) == 0);
}

TEST_CASE("window_index honours the origin and rejects earlier timestamps") {
    WindowSpec w{5.0, 2.0};
    CHECK(window_index(2.0, w) == 0);
    CHECK(window_index(6.99, w) == 0);
    CHECK(window_index(7.0, w) == 1);
    CHECK_THROWS_AS(window_index(1.5, w), DomainError);
    CHECK_THROWS_AS(window_index(NAN, w), DomainError);
    CHECK_THROWS_AS(window_index(INFINITY, w), DomainError);
}

TEST_CASE("window_index: t always lies inside its window") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> len(0.1, 10.0), origin(0.0, 3.0), off(0.0, 5000.0);
    std::uniform_int_distribution<int> kk(0, 2000);
    for (int i = 0; i < 5000; ++i) {
        WindowSpec w{len(rng), origin(rng)};
        // Half the cases land exactly on a computed boundary.
        double t = (i % 2) ? w.start(kk(rng)) : w.origin + off(rng);
        auto k = window_index(t, w);
        REQUIRE(w.start(k) <= t);
        REQUIRE(t < w.end(k));
    }
}

TEST_CASE("clamp_unit") {
    CHECK(clamp_unit(0.5) == 0.5);
    CHECK(clamp_unit(-0.2) == 0.0);
    CHECK(clamp_unit(1.7) == 1.0);
    CHECK_THROWS_AS(clamp_unit(NAN), DomainError);
    CHECK_THROWS_AS(clamp_unit(-INFINITY), DomainError);
}

TEST_CASE("channel and emotion names round-trip") {
    for (auto c : {ChannelId::Blink, ChannelId::Gaze, ChannelId::Emotion, ChannelId::Posture, ChannelId::Noise,
                   ChannelId::Identity})
        CHECK(channel_from_name(channel_name(c)) == c);
    CHECK_FALSE(channel_from_name("pulse"));
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        auto e = static_cast<EmotionLabel>(i);
        CHECK(emotion_from_name(emotion_name(e)) == e);
    }
    CHECK_FALSE(emotion_from_name("bored"));
}

TEST_CASE("default emotion table") {
    auto t = default_emotion_table();
    auto at = [&](EmotionLabel e) { return t[static_cast<std::size_t>(e)]; };
    CHECK(at(EmotionLabel::Happy) == 1.0);
    CHECK(at(EmotionLabel::Neutral) == 0.9);
    CHECK(at(EmotionLabel::Surprise) == 0.8);
    CHECK(at(EmotionLabel::Sad) == 0.3);
    CHECK(at(EmotionLabel::Fear) == 0.2);
    CHECK(at(EmotionLabel::Angry) == 0.2);
    CHECK(at(EmotionLabel::Disgust) == 0.1);
}

TEST_CASE("config JSON") {
    SUBCASE("empty document gives defaults") {
        CHECK(config_from_json("{}") == Config{});
    }
    SUBCASE("round trip") {
        Config c;
        c.ear_threshold = 0.23;
        c.window.length = 2.5;
        c.fixed_n = 5;
        c.emotion_score_table[static_cast<std::size_t>(EmotionLabel::Sad)] = 0.45;
        c.posture.min_keypoints = 7;
        CHECK(config_from_json(config_to_json(c)) == c);
        CHECK(config_to_json(config_from_json(config_to_json(c))) == config_to_json(c));
    }
    SUBCASE("partial nested objects keep remaining defaults") {
        auto c = config_from_json(R"({"window":{"length":10},"noise":{"loud_db":80}})");
        CHECK(c.window.length == 10.0);
        CHECK(c.window.origin == 0.0);
        CHECK(c.noise.loud_db == 80.0);
        CHECK(c.noise.quiet_db == 50.0);
    }
    SUBCASE("rejections") {
        CHECK_THROWS_AS(config_from_json(R"({"ear_treshold":0.2})"), ConfigError);
        CHECK_THROWS_AS(config_from_json(R"({"ear_threshold":1.5})"), ConfigError);
        CHECK_THROWS_AS(config_from_json(R"({"window":{"length":0}})"), ConfigError);
        CHECK_THROWS_AS(config_from_json(R"({"fixed_n":3})"), ConfigError);
        CHECK_THROWS_AS(config_from_json(R"({"emotion_score_table":{"happy":2}})"), ConfigError);
        CHECK_THROWS_AS(config_from_json(R"({"emotion_score_table":{"bored":0.5}})"), ConfigError);
        CHECK_THROWS_AS(config_from_json(R"({"blink_anchors":{"bpm_norm_high":40}})"), ConfigError);
        CHECK_THROWS_AS(config_from_json("[1,2]"), ConfigError);
        CHECK_THROWS_AS(config_from_json("{not json"), ConfigError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_config("/nonexistent/attnpipe.json"), IoError);
    }
}
