#pragma once

// Run reports, per-window CSV and SVG plots.

#include "attnpipe/evaluation.hpp"
#include "attnpipe/fusion.hpp"
#include "attnpipe/model.hpp"
#include "attnpipe/pipeline.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace attnpipe {

inline constexpr std::string_view kReportFormat = "attnpipe-report/1";

/// Wall-clock metadata; excluded when comparing runs.
struct RunInfo {
    std::string mode;    // "run" or "score"
    double speed = 0.0;  // +inf for batch
    double elapsed_s = 0.0;

    friend bool operator==(const RunInfo&, const RunInfo&) = default;
};

struct RunReport {
    SessionMeta meta;
    Config config;
    std::vector<AttentionPoint> rows;
    std::vector<AlertEvent> alerts;
    AttendanceLedger attendance;
    std::optional<RunInfo> run;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

RunReport make_report(const Timeline& timeline, const Config& cfg, std::optional<RunInfo> run = std::nullopt);

std::string report_to_json(const RunReport& report);
/// Throws ConfigError for a document that is not a valid report.
RunReport report_from_json(std::string_view text);
RunReport load_report(const std::string& path);

/// window,start,blink,gaze,emotion,posture,noise,att,n,partial
std::string windows_csv(const RunReport& report);

/// One polyline per channel present in at least one window, plus the
/// attention series, all on a 0..100 scale.
std::string timeline_svg(const RunReport& report);

/// {"rmse":..,"mae":..,"r2":..,"mape":..,"n_windows":..}
std::string metrics_json(const MetricReport& m);
/// window,predicted,observed,error
std::string metrics_csv(std::span<const PairedPoint> series);
/// Predicted vs observed overlay.
std::string eval_svg(std::span<const PairedPoint> series);

/// Predicted attention per window as stored in a report.
std::map<WindowIndex, double> predicted_by_window(const RunReport& report);

} // namespace attnpipe
