#include "attnpipe/errors.hpp"
#include "attnpipe/session_io.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include "doctest.h"

using namespace attnpipe;

namespace {

const char* kHeader = R"({"format":"attnpipe/1","subject":"s01","duration_s":20})";

std::string audio_line(double t, double db = 45.0) {
    return serialize_record({t, AudioPayload{db}});
}

std::string session_text(const std::vector<std::string>& lines) {
    std::string s = std::string(kHeader) + "\n";
    for (const auto& l : lines) s += l + "\n";
    return s;
}

FeatureRecord random_record(std::mt19937_64& rng, double t) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto coord = [&] { return std::round(u(rng) * 64000.0) / 100.0; };
    switch (rng() % 7) {
    case 0: return {t, AudioPayload{std::round(u(rng) * 12000.0) / 100.0}};
    case 1: return {t, EmotionPayload{static_cast<EmotionLabel>(rng() % kEmotionCount)}};
    case 2: return {t, IdentityPayload{"s" + std::to_string(rng() % 3), (rng() % 2) == 0}};
    case 3: {
        LandmarksPayload lm;
        for (auto& p : lm.pts) p = {coord(), coord()};
        return {t, lm};
    }
    case 4: return {t, ObservedPayload{std::round(u(rng) * 10000.0) / 100.0}};
    case 5: {
        PosePayload pose;
        for (auto& k : pose.kp) k = {{coord(), coord()}, std::round(u(rng) * 100.0) / 100.0};
        return {t, pose};
    }
    default: {
        PupilsPayload p;
        if (rng() % 3) p.left = Point2D{coord(), coord()};
        if (rng() % 3) p.right = Point2D{coord(), coord()};
        return {t, p};
    }
    }
}

} // namespace

TEST_CASE("parse_session examples") {
    SUBCASE("header only") {
        auto s = parse_session(session_text({}), 1.0);
        CHECK(s.meta.subject == "s01");
        CHECK(s.meta.duration_s == 20.0);
        CHECK(s.records.empty());
    }
    SUBCASE("already sorted") {
        auto s = parse_session(session_text({audio_line(0.0), audio_line(0.5), audio_line(1.0)}), 1.0);
        REQUIRE(s.records.size() == 3);
        CHECK(s.records[0].t == 0.0);
        CHECK(s.records[1].t == 0.5);
        CHECK(s.records[2].t == 1.0);
    }
    SUBCASE("reorder within skew") {
        auto s = parse_session(session_text({audio_line(1.0), audio_line(0.5)}), 1.0);
        REQUIRE(s.records.size() == 2);
        CHECK(s.records[0].t == 0.5);
        CHECK(s.records[1].t == 1.0);
    }
    SUBCASE("blank lines are skipped") {
        auto s = parse_session(std::string(kHeader) + "\n\n" + audio_line(0.0) + "\n  \n", 1.0);
        CHECK(s.records.size() == 1);
    }
    SUBCASE("equal timestamps order by kind name") {
        auto s = parse_session(session_text({serialize_record({1.0, PupilsPayload{}}),
                                             serialize_record({1.0, LandmarksPayload{}}), audio_line(1.0)}),
                               1.0);
        REQUIRE(s.records.size() == 3);
        CHECK(s.records[0].kind() == RecordKind::Audio);
        CHECK(s.records[1].kind() == RecordKind::Landmarks);
        CHECK(s.records[2].kind() == RecordKind::Pupils);
    }
}

TEST_CASE("parse errors carry the line number") {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            parse_session(text, 1.0);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("") == 1);
    CHECK(line_of(R"({"format":"other/1","subject":"a","duration_s":1})") == 1);
    CHECK(line_of(session_text({audio_line(0.0), "{\"t\":0.1,\"kind\":\"audio\"}"})) == 3);
    CHECK(line_of(session_text({audio_line(0.0), audio_line(0.1), "{oops"})) == 4);
    CHECK(line_of(session_text({R"({"t":0.1,"kind":"heartbeat"})"})) == 2);
    CHECK(line_of(session_text({R"({"t":-1,"kind":"audio","db":40})"})) == 2);
    CHECK(line_of(session_text({R"({"t":0.1,"kind":"emotion","label":"bored"})"})) == 2);
    CHECK(line_of(session_text({R"({"t":0.1,"kind":"landmarks","pts":[[1,2]]})"})) == 2);
    CHECK(line_of(session_text({R"({"t":0.1,"kind":"observed","att":140})"})) == 2);
    CHECK(line_of(session_text({R"({"t":0.1,"kind":"identity","subject":"a","verified":"yes"})"})) == 2);
    // Beyond the skew.
    CHECK(line_of(session_text({audio_line(5.0), audio_line(3.5)})) == 3);
    // Past the declared duration.
    CHECK(line_of(session_text({audio_line(21.0)})) == 2);

    try {
        parse_session(session_text({audio_line(0), audio_line(1), audio_line(2), audio_line(3), audio_line(4),
                                    "garbage"}),
                      1.0);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 7);
        CHECK(std::string(e.what()).rfind("line 7: ", 0) == 0);
    }
}

TEST_CASE("unknown duration accepts any timestamp") {
    std::string text = std::string(R"({"format":"attnpipe/1","subject":"x","duration_s":0})") + "\n" +
                       audio_line(100.0) + "\n";
    CHECK(parse_session(text, 1.0).records.size() == 1);
}

TEST_CASE("serialize/parse round trip") {
    std::mt19937_64 rng(3);
    for (int iter = 0; iter < 50; ++iter) {
        Session s;
        s.meta = {"sub \"quoted\" " + std::to_string(iter), 30.0};
        double t = 0.0;
        for (int i = 0; i < 40; ++i) {
            t += static_cast<double>(rng() % 100) / 1000.0;
            s.records.push_back(random_record(rng, t));
        }
        std::stable_sort(s.records.begin(), s.records.end(), record_before);
        auto text = serialize_session(s);
        auto back = parse_session(text, 1.0);
        REQUIRE(back == s);
        CHECK(serialize_session(back) == text);
    }
}

TEST_CASE("permutations within the skew parse to the same session") {
    std::mt19937_64 rng(5);
    Session s;
    s.meta = {"p", 30.0};
    for (int i = 0; i < 300; ++i) s.records.push_back(random_record(rng, static_cast<double>(i) * 0.05));
    std::stable_sort(s.records.begin(), s.records.end(), record_before);
    auto reference = parse_session(serialize_session(s), 1.0);

    for (int iter = 0; iter < 20; ++iter) {
        // Displace every record by a random delay < skew and sort by arrival.
        std::vector<std::pair<double, std::size_t>> arrival;
        std::uniform_real_distribution<double> delay(0.0, 0.999);
        for (std::size_t i = 0; i < s.records.size(); ++i) arrival.emplace_back(s.records[i].t + delay(rng), i);
        std::sort(arrival.begin(), arrival.end());
        std::string text = serialize_header(s.meta) + "\n";
        for (auto [_, i] : arrival) text += serialize_record(s.records[i]) + "\n";
        auto shuffled = parse_session(text, 1.0);
        // Same-kind ties at equal t are absent here, so the order is total.
        CHECK(shuffled == reference);
    }
}

TEST_CASE("watermark arithmetic") {
    WindowSpec w{5.0, 0.0};
    CHECK(watermark(10.0, 1.0) == 9.0);
    CHECK_FALSE(window_finalizable(0, w, watermark(4.9, 1.0)));
    CHECK(window_finalizable(0, w, watermark(6.0, 1.0)));
    CHECK_FALSE(window_finalizable(1, w, watermark(10.5, 1.0)));
}

TEST_CASE("ReorderBuffer releases below the watermark in canonical order") {
    ReorderBuffer buf(1.0);
    std::vector<double> released;
    auto sink = [&](FeatureRecord r) { released.push_back(r.t); };

    buf.push({2.0, AudioPayload{}});
    buf.push({1.5, AudioPayload{}});
    buf.release(sink);
    CHECK(released.empty());
    buf.push({3.2, AudioPayload{}});
    buf.release(sink);
    CHECK(released == std::vector<double>{1.5, 2.0});
    CHECK_THROWS_AS(buf.push({2.1, AudioPayload{}}), ContractError);
    buf.push({2.5, AudioPayload{}});
    buf.drain(sink);
    CHECK(released == std::vector<double>{1.5, 2.0, 2.5, 3.2});
    CHECK(buf.pending() == 0);
}

TEST_CASE("parse_speed") {
    CHECK(parse_speed("max") == kBatchSpeed);
    CHECK(parse_speed("inf") == kBatchSpeed);
    CHECK(parse_speed("2") == 2.0);
    CHECK(parse_speed("0.5") == 0.5);
    CHECK_THROWS_AS(parse_speed("0"), ConfigError);
    CHECK_THROWS_AS(parse_speed("-1"), ConfigError);
    CHECK_THROWS_AS(parse_speed("fast"), ConfigError);
    CHECK_THROWS_AS(parse_speed("2x"), ConfigError);
}

TEST_CASE("replay pacing") {
    Session s;
    s.meta = {"r", 5.0};
    s.records = {{0.0, AudioPayload{40}}, {1.0, AudioPayload{41}}};

    auto gap_at = [&](double speed) {
        std::vector<std::chrono::steady_clock::time_point> at;
        std::vector<double> order;
        replay(s, speed, [&](const FeatureRecord& r) {
            at.push_back(std::chrono::steady_clock::now());
            order.push_back(r.t);
        });
        REQUIRE(order == std::vector<double>{0.0, 1.0});
        return std::chrono::duration<double>(at[1] - at[0]).count();
    };
    CHECK(gap_at(kBatchSpeed) < 0.05);
    double g1 = gap_at(1.0);
    CHECK(g1 > 0.95);
    CHECK(g1 < 1.3);
    double g2 = gap_at(2.0);
    CHECK(g2 > 0.45);
    CHECK(g2 < 0.8);
}

TEST_CASE("LineStreamSource yields records as lines arrive") {
    std::istringstream in(session_text({audio_line(0.0), audio_line(0.5), "nonsense"}));
    LineStreamSource src(in);
    CHECK(src.meta().subject == "s01");
    CHECK(src.next()->t == 0.0);
    CHECK(src.next()->t == 0.5);
    CHECK_THROWS_AS(src.next(), ParseError);
}

TEST_CASE("load_session on a missing file") {
    CHECK_THROWS_AS(load_session("/nonexistent/session.jsonl", 1.0), IoError);
}
