#include "attnpipe/context_signals.hpp"
#include "attnpipe/errors.hpp"

#include <random>

#include "doctest.h"

using namespace attnpipe;

namespace {

PoseFrame upright(double t, double conf = 0.9) {
    PoseFrame f;
    f.t = t;
    for (std::size_t i = 0; i < kPoseKeypointCount; ++i)
        f.kp[i] = {{100.0 + 10.0 * static_cast<double>(i), 200.0 + 5.0 * static_cast<double>(i % 4)}, conf};
    f.kp[pose_kp::kLeftShoulder] = {{260.0, 300.0}, conf};
    f.kp[pose_kp::kRightShoulder] = {{140.0, 300.0}, conf};
    f.kp[pose_kp::kLeftHip] = {{240.0, 450.0}, conf};
    f.kp[pose_kp::kRightHip] = {{160.0, 450.0}, conf};
    return f;
}

} // namespace

TEST_CASE("emotion scores") {
    auto table = default_emotion_table();
    CHECK(emotion_score(EmotionLabel::Happy, table) == 1.0);
    std::vector<EmotionLabel> w{EmotionLabel::Happy, EmotionLabel::Sad};
    CHECK(*emotion_window_score(w, table) == doctest::Approx(0.65).epsilon(1e-15));
    CHECK_FALSE(emotion_window_score(std::vector<EmotionLabel>{}, table));
}

TEST_CASE("linear emotion classifier") {
    LinearEmotionModel m;
    m.feature_dim = 4;
    for (auto& row : m.weights) row.assign(4, 0.0);

    SUBCASE("constructed argmax") {
        m.weights[static_cast<std::size_t>(EmotionLabel::Happy)].assign(4, 1.0);
        std::vector<double> f{0.5, 1.0, 2.0, 0.1};
        CHECK(classify_emotion(f, m) == EmotionLabel::Happy);
    }
    SUBCASE("ties go to the first label") {
        std::vector<double> f{1, 2, 3, 4};
        CHECK(classify_emotion(f, m) == EmotionLabel::Angry);
        m.bias[static_cast<std::size_t>(EmotionLabel::Sad)] = 1.0;
        m.bias[static_cast<std::size_t>(EmotionLabel::Neutral)] = 1.0;
        CHECK(classify_emotion(f, m) == EmotionLabel::Sad);
    }
    SUBCASE("dimension mismatch") {
        std::vector<double> f{1, 2};
        CHECK_THROWS_AS(classify_emotion(f, m), ConfigError);
    }
    SUBCASE("agrees with an exhaustive argmax") {
        std::mt19937_64 rng(29);
        std::normal_distribution<double> n(0.0, 1.0);
        for (int iter = 0; iter < 1000; ++iter) {
            for (auto& row : m.weights)
                for (auto& w : row) w = n(rng);
            for (auto& b : m.bias) b = n(rng);
            std::vector<double> f{n(rng), n(rng), n(rng), n(rng)};
            std::size_t best = 0;
            double best_v = -1e300;
            for (std::size_t k = 0; k < kEmotionCount; ++k) {
                double v = m.bias[k];
                for (std::size_t j = 0; j < 4; ++j) v += m.weights[k][j] * f[j];
                if (v > best_v) {
                    best_v = v;
                    best = k;
                }
            }
            REQUIRE(classify_emotion(f, m) == static_cast<EmotionLabel>(best));
        }
    }
    SUBCASE("JSON round trip") {
        m.weights[2] = {0.25, -1.5, 3.0, 0.0};
        m.bias[6] = 0.125;
        auto back = emotion_model_from_json(emotion_model_to_json(m));
        CHECK(back.feature_dim == 4);
        CHECK(back.weights == m.weights);
        CHECK(back.bias == m.bias);
        CHECK_THROWS_AS(emotion_model_from_json(R"({"feature_dim":1})"), ConfigError);
        CHECK_THROWS_AS(load_emotion_model("/nonexistent/model.json"), IoError);
    }
}

TEST_CASE("posture displacement") {
    Config cfg;
    auto a = upright(0.0);
    SUBCASE("identical frames") {
        auto b = a;
        b.t = 0.1;
        CHECK(*posture_displacement(a, b, cfg) == 0.0);
    }
    SUBCASE("shift by one shoulder width") {
        auto b = a;
        b.t = 0.1;
        double s = *torso_scale(a, cfg);
        CHECK(s == 120.0);
        for (auto& k : b.kp) {
            k.p.x += s * 0.6;
            k.p.y += s * 0.8;
        }
        CHECK(*posture_displacement(a, b, cfg) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("too few confident pairs") {
        auto b = upright(0.1, 0.1);
        for (std::size_t i : {0u, 1u, 2u}) b.kp[i].conf = 0.9;
        CHECK_FALSE(posture_displacement(a, b, cfg));
    }
    SUBCASE("shoulder-hip fallback") {
        auto b = a;
        b.t = 0.1;
        b.kp[pose_kp::kRightShoulder].conf = 0.0;
        CHECK(*torso_scale(b, cfg) == doctest::Approx(distance({260, 300}, {240, 450})));
        b.kp[pose_kp::kLeftShoulder].conf = 0.0;
        CHECK_FALSE(torso_scale(b, cfg));
        CHECK_FALSE(posture_displacement(a, b, cfg));
    }
    SUBCASE("time must advance") {
        CHECK_THROWS_AS(posture_displacement(a, a, cfg), ContractError);
    }
}

TEST_CASE("posture window score") {
    Config cfg;
    CHECK(*posture_window_score(std::vector<double>{0, 0, 0}, cfg) == 1.0);
    CHECK(*posture_window_score(std::vector<double>{0.5}, cfg) == 0.0);
    CHECK(*posture_window_score(std::vector<double>{0.25, 0.25}, cfg) == 0.5);
    CHECK(*posture_window_score(std::vector<double>{3.0}, cfg) == 0.0);
    CHECK_FALSE(posture_window_score(std::vector<double>{}, cfg));
}

TEST_CASE("noise score") {
    Config cfg;
    CHECK(noise_level_score(40.0, cfg) == 1.0);
    CHECK(noise_level_score(50.0, cfg) == 1.0);
    CHECK(noise_level_score(62.5, cfg) == 0.75);
    CHECK(noise_level_score(75.0, cfg) == 0.5);
    CHECK(noise_level_score(150.0, cfg) == 0.25);
    CHECK(*noise_score(std::vector<double>{140.0, 160.0}, cfg) == 0.25);
    CHECK_FALSE(noise_score(std::vector<double>{}, cfg));
    CHECK_THROWS_AS(noise_score(std::vector<double>{40.0, NAN}, cfg), DomainError);

    double prev = 2.0;
    for (double db = 0.0; db < 200.0; db += 0.5) {
        double s = noise_level_score(db, cfg);
        CHECK(s <= prev);
        CHECK(s > 0.0);
        CHECK(s <= 1.0);
        prev = s;
    }
}
