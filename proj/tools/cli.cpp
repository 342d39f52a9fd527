#include "cli.hpp"

#include "attnpipe/errors.hpp"
#include "attnpipe/evaluation.hpp"
#include "attnpipe/pipeline.hpp"
#include "attnpipe/report.hpp"
#include "attnpipe/session_io.hpp"
#include "attnpipe/synth.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

namespace attnpipe::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    std::string speed = "1";
    bool no_bell = false;
    std::uint64_t seed = 0;
    std::string session;
    std::string report;
    std::string script;
    std::string output;
};

Config resolve_config(const std::string& flag) {
    std::string path = flag;
    if (path.empty())
        if (const char* env = std::getenv("ATTNPIPE_CONFIG"); env && *env) path = env;
    if (path.empty()) return Config{};
    return load_config(path);
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << content;
    if (!f.flush()) throw IoError("write failed: " + path.string());
}

std::string fixed(double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

int cmd_run(const Options& o, bool live, std::ostream& out) {
    Config cfg = resolve_config(o.config);
    Session session = load_session(o.session, cfg.watermark_skew);
    double speed = live ? parse_speed(o.speed) : kBatchSpeed;

    auto t0 = std::chrono::steady_clock::now();
    Timeline tl;
    if (live) {
        Renderer renderer(out, cfg.window, !o.no_bell);
        ReplaySource source(session, speed);
        EngineOptions opts{Execution::Concurrent, std::isfinite(speed) ? std::size_t{1} : std::size_t{1024}};
        tl = run_source(source, cfg, opts, [&renderer](const TimelineEvent& ev) { renderer(ev); });
    } else {
        tl = build_timeline(session, cfg, Execution::Sequential);
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunReport report = make_report(tl, cfg, RunInfo{live ? "run" : "score", speed, elapsed});
    fs::path dir(o.out);
    write_file(dir / "report.json", report_to_json(report));
    write_file(dir / "windows.csv", windows_csv(report));
    write_file(dir / "timeline.svg", timeline_svg(report));

    const auto& led = report.attendance;
    out << report.rows.size() << " windows, " << report.alerts.size() << " drowsiness alert"
        << (report.alerts.size() == 1 ? "" : "s") << ", attendance " << fixed(100.0 * led.coverage, 1) << "% ("
        << (led.present ? "present" : "absent") << ")\n";
    out << "wrote " << (dir / "report.json").string() << ", windows.csv, timeline.svg\n";
    return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
    RunReport report = load_report(o.report);
    Session session = load_session(o.session, report.config.watermark_skew);
    PairedSeries series = pair_by_window(predicted_by_window(report), observed_by_window(session, report.config.window));
    if (series.empty()) throw DomainError("no window has both a prediction and an observed score");
    MetricReport m = evaluate(series);

    fs::path dir(o.out);
    write_file(dir / "metrics.json", metrics_json(m));
    write_file(dir / "metrics.csv", metrics_csv(series));
    write_file(dir / "eval.svg", eval_svg(series));

    out << "windows " << m.n_windows << "  rmse " << fixed(m.rmse, 4) << "  mae " << fixed(m.mae, 4) << "  r2 "
        << (m.r2 ? fixed(*m.r2, 4) : std::string("n/a")) << "  mape " << fixed(m.mape, 2) << "%\n";
    return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
    Config cfg = resolve_config(o.config);
    ScenarioScript script = load_script(o.script);
    SynthResult res = synthesize(script, o.seed, cfg);

    fs::path session_path = o.output.empty() ? fs::path(o.out) / "session.jsonl" : fs::path(o.output);
    write_file(session_path, serialize_session(res.session));

    std::ostringstream gt;
    gt << "window,att\n";
    for (const auto& [w, att] : res.ground_truth) gt << w << ',' << fixed(att, 6) << '\n';
    fs::path gt_path = session_path.parent_path() / (session_path.stem().string() + ".truth.csv");
    write_file(gt_path, gt.str());

    out << "wrote " << session_path.string() << " (" << res.session.records.size() << " records), "
        << gt_path.string() << '\n';
    return kExitOk;
}

} // namespace

std::string sparkline(const std::deque<double>& values) {
    static constexpr std::array<const char*, 8> kBars{"▁", "▂", "▃", "▄",
                                                      "▅", "▆", "▇", "█"};
    std::string s;
    for (double v : values) {
        int level = static_cast<int>(clamp_unit(v / 100.0) * 8.0);
        s += kBars[static_cast<std::size_t>(std::min(level, 7))];
    }
    return s;
}

void Renderer::operator()(const TimelineEvent& ev) {
    std::visit(
        [this](const auto& v) {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, AttentionPoint>)
                point(v);
            else
                alert(v);
        },
        ev);
    out_.flush();
}

void Renderer::point(const AttentionPoint& p) {
    recent_.push_back(p.att);
    while (recent_.size() > history_) recent_.pop_front();

    char head[32];
    std::snprintf(head, sizeof head, "%8.1fs", window_.start(p.window));
    out_ << head;
    for (auto c : kScoringChannelIds) {
        const auto& s = p.contributions[channel_slot(c)];
        out_ << "  " << channel_name(c) << ' ' << (s ? fixed(*s, 2) : std::string("   -"));
    }
    char att[32];
    std::snprintf(att, sizeof att, "%6.1f", p.att);
    out_ << "  att " << att << (p.partial ? "*" : " ") << ' ' << sparkline(recent_) << '\n';
}

void Renderer::alert(const AlertEvent& a) {
    out_ << "!! DROWSINESS at " << fixed(a.t, 2) << "s, eyes closed since " << fixed(a.closed_since, 2) << "s";
    if (bell_) out_ << '\a';
    out_ << '\n';
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multimodal attention scoring over recorded feature sessions", "attnpipe"};
    app.require_subcommand(1);
    Options o;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Config JSON (falls back to $ATTNPIPE_CONFIG)");
    };
    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    };

    auto* run_cmd = app.add_subcommand("run", "Replay a session with a live view");
    run_cmd->add_option("session", o.session, "Session log (JSON lines)")->required();
    add_config(run_cmd);
    add_out(run_cmd);
    run_cmd->add_option("--speed", o.speed, "Replay speed multiplier, or 'max'")->capture_default_str();
    run_cmd->add_flag("--no-bell", o.no_bell, "Do not ring the terminal bell on drowsiness");

    auto* score_cmd = app.add_subcommand("score", "Score a session in batch");
    score_cmd->add_option("session", o.session, "Session log (JSON lines)")->required();
    add_config(score_cmd);
    add_out(score_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "Compare a report with observed scores");
    eval_cmd->add_option("report", o.report, "report.json from run or score")->required();
    eval_cmd->add_option("session", o.session, "Session log holding observed records")->required();
    add_out(eval_cmd);

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic session from a scenario script");
    synth_cmd->add_option("script", o.script, "Scenario script (JSON)")->required();
    synth_cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    synth_cmd->add_option("-o,--output", o.output, "Session file (default <out>/session.jsonl)");
    add_config(synth_cmd);
    add_out(synth_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*run_cmd) return cmd_run(o, true, out);
        if (*score_cmd) return cmd_run(o, false, out);
        if (*eval_cmd) return cmd_eval(o, out);
        return cmd_synth(o, out);
    } catch (const ParseError& e) {
        err << "attnpipe: " << (o.session.empty() ? std::string() : o.session + ": ") << e.what() << '\n';
        return kExitInput;
    } catch (const IoError& e) {
        err << "attnpipe: " << e.what() << '\n';
        return kExitInput;
    } catch (const ConfigError& e) {
        err << "attnpipe: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << "attnpipe: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace attnpipe::cli
