#include "attnpipe/ocular.hpp"

#include "attnpipe/errors.hpp"

#include <cmath>

namespace attnpipe {

EyePair eyes_from_landmarks(const LandmarksPayload& lm) noexcept {
    auto eye = [&](std::size_t base) {
        return EyeObservation{lm.pts[base], lm.pts[base + 1], lm.pts[base + 2],
                              lm.pts[base + 3], lm.pts[base + 4], lm.pts[base + 5]};
    };
    return {eye(36), eye(42)};
}

double ear(const EyeObservation& eye) {
    double width = distance(eye.p1, eye.p4);
    if (!(width > 0.0)) throw DomainError("degenerate eye: p1 and p4 coincide");
    return (distance(eye.p2, eye.p6) + distance(eye.p3, eye.p5)) / (2.0 * width);
}

std::optional<double> mean_ear(const EyeObservation& left, const EyeObservation& right) noexcept {
    double sum = 0.0;
    int n = 0;
    for (const auto* e : {&left, &right}) {
        double w = distance(e->p1, e->p4);
        if (!(w > 0.0)) continue;
        sum += (distance(e->p2, e->p6) + distance(e->p3, e->p5)) / (2.0 * w);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

std::optional<EyeState> eye_state(const EyeObservation& left, const EyeObservation& right, const Config& cfg) {
    auto m = mean_ear(left, right);
    if (!m) return std::nullopt;
    return *m < cfg.ear_threshold ? EyeState::Closed : EyeState::Open;
}

void blink_feed(BlinkTrackerState& st, Timestamp t, EyeState s, const Config& cfg, std::vector<BlinkEvent>& events) {
    if (st.last_t && t < *st.last_t) {
        throw ContractError("blink tracker fed out of order: " + std::to_string(t) + " after " +
                            std::to_string(*st.last_t));
    }
    st.last_t = t;

    if (s == EyeState::Closed) {
        if (st.current == EyeState::Open) {
            st.current = EyeState::Closed;
            st.closed_since = t;
            st.drowsy_alerted = false;
        }
        double run = t - *st.closed_since;
        if (!st.drowsy_alerted && run > cfg.drowsiness_seconds) {
            st.drowsy_alerted = true;
            events.push_back(DrowsinessOnset{t, *st.closed_since, run});
        }
        return;
    }

    if (st.current == EyeState::Open) return;

    Timestamp since = *st.closed_since;
    double run = t - since;
    if (st.drowsy_alerted) {
        events.push_back(DrowsinessEnded{t, since, run});
    } else if (run > cfg.drowsiness_seconds) {
        // No closed frame landed past the limit; the reopen frame is the
        // first evidence of drowsiness.
        events.push_back(DrowsinessOnset{t, since, run});
        events.push_back(DrowsinessEnded{t, since, run});
    } else {
        WindowIndex w = window_index(t, cfg.window);
        ++st.blinks_by_window[w];
        events.push_back(BlinkCompleted{t, w, run});
    }
    st.current = EyeState::Open;
    st.closed_since.reset();
    st.drowsy_alerted = false;
}

std::vector<BlinkEvent> blink_feed(BlinkTrackerState& state, Timestamp t, EyeState s, const Config& cfg) {
    std::vector<BlinkEvent> events;
    blink_feed(state, t, s, cfg, events);
    return events;
}

double blink_rate_score_bpm(double bpm, const Config& cfg) {
    if (!std::isfinite(bpm)) throw DomainError("blink rate must be finite");
    const auto& a = cfg.blink_anchors;
    if (bpm <= a.bpm_focus) return 1.0;
    if (bpm <= a.bpm_norm_high) {
        double f = (bpm - a.bpm_focus) / (a.bpm_norm_high - a.bpm_focus);
        return 1.0 - (1.0 - a.normal_score) * f;
    }
    if (bpm <= a.bpm_low_attention) {
        double f = (bpm - a.bpm_norm_high) / (a.bpm_low_attention - a.bpm_norm_high);
        return a.normal_score * (1.0 - f);
    }
    return 0.0;
}

double blink_rate_score(int blinks_in_window, const Config& cfg) {
    return blink_rate_score_bpm(static_cast<double>(blinks_in_window) * (60.0 / cfg.window.length), cfg);
}

WindowRange run_windows(Timestamp closed_since, Timestamp end, bool end_inclusive, const WindowSpec& spec) {
    WindowIndex first = window_index(closed_since, spec);
    WindowIndex last = window_index(end, spec);
    if (!end_inclusive && last > first && spec.start(last) >= end) --last;
    return {first, std::max(first, last)};
}

GazeDirection gaze_direction(const EyeObservation& eye, std::optional<Point2D> pupil, const Config& cfg) {
    if (!pupil) return GazeDirection::Unknown;
    double width = std::abs(eye.p4.x - eye.p1.x);
    if (!(width > 0.0) || !std::isfinite(width)) return GazeDirection::Unknown;
    double r = (pupil->x - std::min(eye.p1.x, eye.p4.x)) / width;
    const auto& band = cfg.gaze_center_band;
    return (r >= band.low && r <= band.high) ? GazeDirection::Screen : GazeDirection::Away;
}

GazeDirection combine_gaze(GazeDirection left, GazeDirection right) noexcept {
    if (left == GazeDirection::Unknown) return right;
    if (right == GazeDirection::Unknown) return left;
    return (left == GazeDirection::Screen && right == GazeDirection::Screen) ? GazeDirection::Screen
                                                                            : GazeDirection::Away;
}

std::optional<double> gaze_window_score(std::span<const GazeDirection> frames) noexcept {
    std::size_t known = 0, screen = 0;
    for (auto g : frames) {
        if (g == GazeDirection::Unknown) continue;
        ++known;
        if (g == GazeDirection::Screen) ++screen;
    }
    if (known == 0) return std::nullopt;
    return static_cast<double>(screen) / static_cast<double>(known);
}

} // namespace attnpipe
