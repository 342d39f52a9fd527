#include "attnpipe/evaluation.hpp"

#include "attnpipe/errors.hpp"

#include <cmath>

namespace attnpipe {

namespace {

void require_nonempty(std::span<const PairedPoint> s, const char* metric) {
    if (s.empty()) throw DomainError(std::string(metric) + ": empty series");
}

} // namespace

PairedSeries pair_by_window(const std::map<WindowIndex, double>& predicted,
                            const std::map<WindowIndex, double>& observed) {
    PairedSeries out;
    for (const auto& [w, p] : predicted)
        if (auto it = observed.find(w); it != observed.end()) out.push_back({w, p, it->second});
    return out;
}

double rmse(std::span<const PairedPoint> s) {
    require_nonempty(s, "rmse");
    double acc = 0.0;
    for (const auto& p : s) acc += (p.predicted - p.observed) * (p.predicted - p.observed);
    return std::sqrt(acc / static_cast<double>(s.size()));
}

double mae(std::span<const PairedPoint> s) {
    require_nonempty(s, "mae");
    double acc = 0.0;
    for (const auto& p : s) acc += std::abs(p.predicted - p.observed);
    return acc / static_cast<double>(s.size());
}

double r2(std::span<const PairedPoint> s) {
    require_nonempty(s, "r2");
    double mean = 0.0;
    for (const auto& p : s) mean += p.observed;
    mean /= static_cast<double>(s.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& p : s) {
        ss_res += (p.observed - p.predicted) * (p.observed - p.predicted);
        ss_tot += (p.observed - mean) * (p.observed - mean);
    }
    if (!(ss_tot > 0.0)) throw DomainError("r2: observed series is constant");
    return 1.0 - ss_res / ss_tot;
}

double mape(std::span<const PairedPoint> s) {
    require_nonempty(s, "mape");
    double acc = 0.0;
    for (const auto& p : s) {
        if (p.observed == 0.0)
            throw DomainError("mape: observed value is 0 in window " + std::to_string(p.window));
        acc += std::abs(p.predicted - p.observed) / std::abs(p.observed);
    }
    return 100.0 * acc / static_cast<double>(s.size());
}

double overall_accuracy(std::span<const double> module_accuracies) {
    if (module_accuracies.empty()) throw DomainError("overall_accuracy: no module accuracies");
    double acc = 0.0;
    for (double a : module_accuracies) {
        if (!(a >= 0.0 && a <= 100.0)) throw DomainError("overall_accuracy: accuracy outside [0,100]");
        acc += a;
    }
    return acc / static_cast<double>(module_accuracies.size());
}

MetricReport evaluate(std::span<const PairedPoint> series) {
    MetricReport m;
    m.rmse = rmse(series);
    m.mae = mae(series);
    try {
        m.r2 = r2(series);
    } catch (const DomainError&) {
        m.r2.reset();
    }
    m.mape = mape(series);
    m.n_windows = series.size();
    return m;
}

} // namespace attnpipe
