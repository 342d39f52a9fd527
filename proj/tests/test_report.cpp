#include "attnpipe/errors.hpp"
#include "attnpipe/report.hpp"
#include "attnpipe/synth.hpp"

#include "report_fixture.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"

using namespace attnpipe;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Series {
    std::string name;
    int declared;
    int vertices;
};

std::vector<Series> polylines(const std::string& svg) {
    std::vector<Series> out;
    std::regex re(R"re(<polyline class="series" data-series="([a-z]+)" data-points="(\d+)"[^>]* points="([^"]*)")re");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
        std::string pts = (*it)[3];
        int n = pts.empty() ? 0 : 1 + static_cast<int>(std::count(pts.begin(), pts.end(), ' '));
        out.push_back({(*it)[1], std::stoi((*it)[2]), n});
    }
    return out;
}

} // namespace

TEST_CASE("report JSON round trip") {
    auto r = report_fixture();
    CHECK(report_from_json(report_to_json(r)) == r);
    r.run = RunInfo{"run", 2.0, 1.25};
    CHECK(report_from_json(report_to_json(r)) == r);
    r.run->speed = kBatchSpeed;
    auto back = report_from_json(report_to_json(r));
    CHECK(back == r);
    CHECK(report_to_json(back) == report_to_json(r));
}

TEST_CASE("report round trip from a scored session") {
    ScenarioScript s;
    s.duration_s = 42.0;
    s.spans.push_back({SpanType::Closure, 10.0, 12.6});
    Config cfg;
    cfg.fixed_n = 5;
    auto tl = build_timeline(synthesize(s, 3, cfg).session, cfg);
    auto report = make_report(tl, cfg);
    auto text = report_to_json(report);
    auto back = report_from_json(text);
    CHECK(back == report);
    CHECK(back.config == cfg);
    CHECK(report_to_json(back) == text);
    CHECK(back.rows.size() == 9);
    CHECK(back.alerts.size() == 1);
}

TEST_CASE("report parser rejects foreign documents") {
    CHECK_THROWS_AS(report_from_json("{}"), ConfigError);
    CHECK_THROWS_AS(report_from_json(R"({"format":"other"})"), ConfigError);
    CHECK_THROWS_AS(report_from_json("not json"), ConfigError);
    CHECK_THROWS_AS(load_report("/nonexistent/report.json"), IoError);
}

TEST_CASE("windows CSV") {
    auto csv = windows_csv(report_fixture());
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "window,start,blink,gaze,emotion,posture,noise,att,n,partial");
    std::getline(in, line);
    CHECK(line == "0,0.000,1.000000,0.750000,0.900000,1.000000,,91.250000,4,0");
    std::getline(in, line);
    CHECK(line == "1,5.000,0.000000,,0.300000,0.500000,,26.666667,3,0");
    std::getline(in, line);
    CHECK(line.substr(line.size() - 2) == ",1");
    CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("timeline SVG has one series per present channel plus att") {
    auto svg = timeline_svg(report_fixture());
    auto series = polylines(svg);
    REQUIRE(series.size() == 5);
    CHECK(series[0].name == "blink");
    CHECK(series[1].name == "gaze");
    CHECK(series[2].name == "emotion");
    CHECK(series[3].name == "posture");
    CHECK(series[4].name == "att");
    for (const auto& s : series) CHECK(s.declared == s.vertices);
    CHECK(series[0].vertices == 3);
    CHECK(series[1].vertices == 2);
    CHECK(series[4].vertices == 3);
}

TEST_CASE("timeline SVG matches the golden file") {
    std::string path = std::string(ATTNPIPE_GOLDEN_DIR) + "/timeline.svg";
    auto svg = timeline_svg(report_fixture());
    if (std::getenv("ATTNPIPE_UPDATE_GOLDEN")) {
        std::ofstream(path) << svg;
    }
    CHECK(svg == read_file(path));
}

TEST_CASE("metrics outputs") {
    MetricReport m{2.0, 1.5, std::nullopt, 3.0, 4};
    auto j = metrics_json(m);
    CHECK(j.find("\"r2\": null") != std::string::npos);
    CHECK(j.find("\"n_windows\": 4") != std::string::npos);

    PairedSeries s{{0, 80, 70}, {1, 90, 100}};
    CHECK(metrics_csv(s) == "window,predicted,observed,error\n0,80.000000,70.000000,10.000000\n"
                            "1,90.000000,100.000000,-10.000000\n");
    auto svg = eval_svg(s);
    auto series = polylines(svg);
    REQUIRE(series.size() == 2);
    CHECK(series[0].name == "predicted");
    CHECK(series[1].name == "observed");
}
