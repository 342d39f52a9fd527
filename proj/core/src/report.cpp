#include "attnpipe/report.hpp"

#include "attnpipe/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace attnpipe {

using nlohmann::json;
using nlohmann::ordered_json;

RunReport make_report(const Timeline& timeline, const Config& cfg, std::optional<RunInfo> run) {
    RunReport r;
    r.meta = timeline.meta;
    r.config = cfg;
    r.rows = timeline.points;
    r.alerts = timeline.alerts;
    r.attendance = timeline.attendance;
    r.run = std::move(run);
    return r;
}

std::string report_to_json(const RunReport& report) {
    ordered_json doc;
    doc["format"] = kReportFormat;
    doc["session"] = {{"subject", report.meta.subject}, {"duration_s", report.meta.duration_s}};
    doc["config"] = ordered_json::parse(config_to_json(report.config));

    auto windows = ordered_json::array();
    for (const auto& p : report.rows) {
        ordered_json scores = ordered_json::object();
        for (auto c : kScoringChannelIds) {
            const auto& s = p.contributions[channel_slot(c)];
            scores[std::string(channel_name(c))] = s ? ordered_json(*s) : ordered_json(nullptr);
        }
        ordered_json row;
        row["window"] = p.window;
        row["start"] = report.config.window.start(p.window);
        row["end"] = report.config.window.end(p.window);
        row["att"] = p.att;
        row["n"] = p.n;
        row["partial"] = p.partial;
        row["scores"] = std::move(scores);
        windows.push_back(std::move(row));
    }
    doc["windows"] = std::move(windows);

    auto alerts = ordered_json::array();
    for (const auto& a : report.alerts) {
        ordered_json j;
        j["kind"] = "drowsiness";
        j["t"] = a.t;
        j["closed_since"] = a.closed_since;
        j["duration"] = a.duration;
        alerts.push_back(std::move(j));
    }
    doc["alerts"] = std::move(alerts);

    const auto& led = report.attendance;
    ordered_json att;
    att["subject"] = led.subject;
    att["coverage"] = led.coverage;
    att["present"] = led.present;
    auto intervals = ordered_json::array();
    for (const auto& iv : led.verified_intervals) intervals.push_back(ordered_json::array({iv.start, iv.end}));
    att["intervals"] = std::move(intervals);
    auto warnings = ordered_json::array();
    for (const auto& w : led.warnings) {
        ordered_json j;
        j["t"] = w.t;
        j["subject"] = w.subject;
        warnings.push_back(std::move(j));
    }
    att["warnings"] = std::move(warnings);
    doc["attendance"] = std::move(att);

    if (report.run) {
        ordered_json run;
        run["mode"] = report.run->mode;
        run["speed"] = std::isfinite(report.run->speed) ? ordered_json(report.run->speed) : ordered_json("max");
        run["elapsed_s"] = report.run->elapsed_s;
        doc["run"] = std::move(run);
    }
    return doc.dump(2) + "\n";
}

RunReport report_from_json(std::string_view text) {
    RunReport r;
    try {
        json doc = json::parse(text);
        if (doc.at("format").get<std::string>() != kReportFormat) throw ConfigError("report: unexpected format");
        r.meta.subject = doc.at("session").at("subject").get<std::string>();
        r.meta.duration_s = doc.at("session").at("duration_s").get<double>();
        r.config = config_from_json(doc.at("config").dump());

        for (const auto& row : doc.at("windows")) {
            AttentionPoint p;
            p.window = row.at("window").get<WindowIndex>();
            p.att = row.at("att").get<double>();
            p.n = row.at("n").get<int>();
            p.partial = row.at("partial").get<bool>();
            for (const auto& [key, value] : row.at("scores").items()) {
                auto c = channel_from_name(key);
                if (!c || !is_scoring(*c)) throw ConfigError("report: unknown channel '" + key + "'");
                if (!value.is_null()) p.contributions[channel_slot(*c)] = value.get<double>();
            }
            r.rows.push_back(p);
        }
        for (const auto& a : doc.at("alerts")) {
            if (a.at("kind").get<std::string>() != "drowsiness") throw ConfigError("report: unknown alert kind");
            r.alerts.push_back({a.at("t").get<double>(), a.at("closed_since").get<double>(),
                                a.at("duration").get<double>(), AlertKind::Drowsiness});
        }
        const auto& att = doc.at("attendance");
        r.attendance.subject = att.at("subject").get<std::string>();
        r.attendance.coverage = att.at("coverage").get<double>();
        r.attendance.present = att.at("present").get<bool>();
        for (const auto& iv : att.at("intervals"))
            r.attendance.verified_intervals.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
        for (const auto& w : att.at("warnings"))
            r.attendance.warnings.push_back({w.at("t").get<double>(), w.at("subject").get<std::string>()});

        if (auto it = doc.find("run"); it != doc.end()) {
            RunInfo info;
            info.mode = it->at("mode").get<std::string>();
            const auto& speed = it->at("speed");
            info.speed = speed.is_string() ? kBatchSpeed : speed.get<double>();
            info.elapsed_s = it->at("elapsed_s").get<double>();
            r.run = info;
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("report: ") + e.what());
    }
    return r;
}

RunReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return report_from_json(ss.str());
}

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

constexpr std::array<const char*, kScoringChannels> kChannelColors{"#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
                                                                   "#8c564b"};

struct Plot {
    static constexpr double kWidth = 800, kHeight = 320, kLeft = 50, kRight = 130, kTop = 20, kBottom = 40;

    WindowIndex first = 0;
    WindowIndex last = 0;

    double x(WindowIndex w) const {
        double span = static_cast<double>(std::max<WindowIndex>(1, last - first));
        return kLeft + (kWidth - kLeft - kRight) * static_cast<double>(w - first) / span;
    }
    static double y(double v) { return kTop + (kHeight - kTop - kBottom) * (1.0 - v / 100.0); }
};

void svg_open(std::ostringstream& o, const Plot& plot, const std::string& title, const std::string& xlabel) {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Plot::kWidth << "\" height=\"" << Plot::kHeight
      << "\" viewBox=\"0 0 " << Plot::kWidth << ' ' << Plot::kHeight << "\">\n";
    o << "<title>" << title << "</title>\n";
    o << "<rect x=\"0\" y=\"0\" width=\"" << Plot::kWidth << "\" height=\"" << Plot::kHeight
      << "\" fill=\"white\"/>\n";
    double x0 = Plot::kLeft, x1 = Plot::kWidth - Plot::kRight;
    for (int v = 0; v <= 100; v += 25) {
        std::string yy = fmt("%.2f", Plot::y(v));
        o << "<line class=\"grid\" x1=\"" << x0 << "\" y1=\"" << yy << "\" x2=\"" << x1 << "\" y2=\"" << yy
          << "\" stroke=\"#dddddd\"/>\n";
        o << "<text x=\"" << x0 - 8 << "\" y=\"" << yy << "\" font-size=\"10\" text-anchor=\"end\">" << v
          << "</text>\n";
    }
    o << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << Plot::kHeight - 8
      << "\" font-size=\"11\" text-anchor=\"middle\">" << xlabel << " (windows " << plot.first << ".."
      << plot.last << ")</text>\n";
}

void svg_series(std::ostringstream& o, const Plot& plot, std::string_view name, const char* color, double width,
                const std::vector<std::pair<WindowIndex, double>>& pts, int legend_row) {
    o << "<polyline class=\"series\" data-series=\"" << name << "\" data-points=\"" << pts.size()
      << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) o << ' ';
        o << fmt("%.2f", plot.x(pts[i].first)) << ',' << fmt("%.2f", Plot::y(pts[i].second));
    }
    o << "\"/>\n";
    double ly = Plot::kTop + 14.0 * legend_row;
    double lx = Plot::kWidth - Plot::kRight + 10;
    o << "<text x=\"" << lx << "\" y=\"" << ly + 4 << "\" font-size=\"11\" fill=\"" << color << "\">" << name
      << "</text>\n";
}

} // namespace

std::string windows_csv(const RunReport& report) {
    std::ostringstream o;
    o << "window,start,blink,gaze,emotion,posture,noise,att,n,partial\n";
    for (const auto& p : report.rows) {
        o << p.window << ',' << fmt("%.3f", report.config.window.start(p.window));
        for (auto c : kScoringChannelIds) {
            o << ',';
            if (const auto& s = p.contributions[channel_slot(c)]) o << fmt("%.6f", *s);
        }
        o << ',' << fmt("%.6f", p.att) << ',' << p.n << ',' << (p.partial ? 1 : 0) << '\n';
    }
    return o.str();
}

std::string timeline_svg(const RunReport& report) {
    Plot plot;
    if (!report.rows.empty()) {
        plot.first = report.rows.front().window;
        plot.last = report.rows.back().window;
    }
    std::ostringstream o;
    svg_open(o, plot, "Attention timeline: " + report.meta.subject, "window");
    int row = 0;
    for (auto c : kScoringChannelIds) {
        std::vector<std::pair<WindowIndex, double>> pts;
        for (const auto& p : report.rows)
            if (const auto& s = p.contributions[channel_slot(c)]) pts.emplace_back(p.window, 100.0 * *s);
        if (pts.empty()) continue;
        svg_series(o, plot, channel_name(c), kChannelColors[channel_slot(c)], 1.2, pts, row++);
    }
    std::vector<std::pair<WindowIndex, double>> att;
    for (const auto& p : report.rows) att.emplace_back(p.window, p.att);
    svg_series(o, plot, "att", "#d62728", 2.5, att, row);
    o << "</svg>\n";
    return o.str();
}

std::string metrics_json(const MetricReport& m) {
    ordered_json j;
    j["rmse"] = m.rmse;
    j["mae"] = m.mae;
    j["r2"] = m.r2 ? ordered_json(*m.r2) : ordered_json(nullptr);
    j["mape"] = m.mape;
    j["n_windows"] = m.n_windows;
    return j.dump(2) + "\n";
}

std::string metrics_csv(std::span<const PairedPoint> series) {
    std::ostringstream o;
    o << "window,predicted,observed,error\n";
    for (const auto& p : series)
        o << p.window << ',' << fmt("%.6f", p.predicted) << ',' << fmt("%.6f", p.observed) << ','
          << fmt("%.6f", p.predicted - p.observed) << '\n';
    return o.str();
}

std::string eval_svg(std::span<const PairedPoint> series) {
    Plot plot;
    if (!series.empty()) {
        plot.first = series.front().window;
        plot.last = series.back().window;
    }
    std::ostringstream o;
    svg_open(o, plot, "Predicted vs observed attention", "window");
    std::vector<std::pair<WindowIndex, double>> pred, obs;
    for (const auto& p : series) {
        pred.emplace_back(p.window, p.predicted);
        obs.emplace_back(p.window, p.observed);
    }
    svg_series(o, plot, "predicted", "#d62728", 2.0, pred, 0);
    svg_series(o, plot, "observed", "#1f77b4", 2.0, obs, 1);
    o << "</svg>\n";
    return o.str();
}

std::map<WindowIndex, double> predicted_by_window(const RunReport& report) {
    std::map<WindowIndex, double> m;
    for (const auto& p : report.rows) m[p.window] = p.att;
    return m;
}

} // namespace attnpipe
