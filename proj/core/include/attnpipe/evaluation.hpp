#pragma once

// Error metrics between predicted and observed attention series.

#include "attnpipe/model.hpp"

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace attnpipe {

struct PairedPoint {
    WindowIndex window = 0;
    double predicted = 0.0;
    double observed = 0.0;
};

using PairedSeries = std::vector<PairedPoint>;

/// Inner join on window index, ordered by window.
PairedSeries pair_by_window(const std::map<WindowIndex, double>& predicted,
                            const std::map<WindowIndex, double>& observed);

// All metrics throw DomainError on an empty series.
double rmse(std::span<const PairedPoint> series);
double mae(std::span<const PairedPoint> series);
/// 1 - SS_res / SS_tot about the observed mean; DomainError when the
/// observed series is constant.
double r2(std::span<const PairedPoint> series);
/// Percentage; DomainError if any observed value is 0.
double mape(std::span<const PairedPoint> series);

/// Arithmetic mean of per-module accuracies (percent).
double overall_accuracy(std::span<const double> module_accuracies);

struct MetricReport {
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> r2;  // absent when the observed series is constant
    double mape = 0.0;
    std::size_t n_windows = 0;
};

MetricReport evaluate(std::span<const PairedPoint> series);

} // namespace attnpipe
