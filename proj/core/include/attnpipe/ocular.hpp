#pragma once

// Eye aspect ratio, blink/drowsiness tracking and gaze classification.

#include "attnpipe/model.hpp"
#include "attnpipe/session_io.hpp"

#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace attnpipe {

/// Six eye keypoints: p1 outer corner, p4 inner corner, p2/p3 upper lid,
/// p6/p5 lower lid (p2 above p6, p3 above p5).
struct EyeObservation {
    Point2D p1, p2, p3, p4, p5, p6;
};

struct EyePair {
    EyeObservation left;
    EyeObservation right;
};

/// Standard 68-point layout: left eye 36..41, right eye 42..47, each mapped
/// in order onto p1..p6.
EyePair eyes_from_landmarks(const LandmarksPayload& lm) noexcept;

/// (|p2-p6| + |p3-p5|) / (2 |p1-p4|). Throws DomainError when p1 == p4.
double ear(const EyeObservation& eye);

enum class EyeState : std::uint8_t { Open, Closed };

/// Mean EAR over the non-degenerate eyes; nullopt when both are degenerate.
std::optional<double> mean_ear(const EyeObservation& left, const EyeObservation& right) noexcept;

/// Closed iff the mean EAR is strictly below the threshold. nullopt when
/// neither eye can be measured (the frame carries no ocular observation).
std::optional<EyeState> eye_state(const EyeObservation& left, const EyeObservation& right, const Config& cfg);

struct BlinkCompleted {
    Timestamp t;          // reopen time
    WindowIndex window;   // window the blink is credited to
    double duration;
};

/// Emitted once per closed run, as soon as the run exceeds the drowsiness
/// limit (or at reopen if no frame was seen in between).
struct DrowsinessOnset {
    Timestamp t;
    Timestamp closed_since;
    double duration;
};

/// Closes a run that triggered DrowsinessOnset; carries the final duration.
struct DrowsinessEnded {
    Timestamp t;
    Timestamp closed_since;
    double duration;
};

using BlinkEvent = std::variant<BlinkCompleted, DrowsinessOnset, DrowsinessEnded>;

struct BlinkTrackerState {
    EyeState current = EyeState::Open;
    std::optional<Timestamp> closed_since;  // present iff current == Closed
    std::map<WindowIndex, int> blinks_by_window;
    bool drowsy_alerted = false;
    std::optional<Timestamp> last_t;
};

/// Advances the tracker by one frame and appends any resulting events to
/// `events`. Throws ContractError if t goes backwards.
void blink_feed(BlinkTrackerState& state, Timestamp t, EyeState s, const Config& cfg,
                std::vector<BlinkEvent>& events);

std::vector<BlinkEvent> blink_feed(BlinkTrackerState& state, Timestamp t, EyeState s, const Config& cfg);

/// Piecewise-linear map from blinks per minute to a unit score: 1 up to the
/// focus anchor, down to normal_score at the top of the normal range, down
/// to 0 at the low-attention anchor.
double blink_rate_score_bpm(double bpm, const Config& cfg);

/// Same, from a per-window blink count extrapolated by 60/window length.
double blink_rate_score(int blinks_in_window, const Config& cfg);

/// Inclusive range of windows touched by a drowsy run. With
/// `end_inclusive` false the run ends just before `end` (a reopen frame).
struct WindowRange {
    WindowIndex first;
    WindowIndex last;
};
WindowRange run_windows(Timestamp closed_since, Timestamp end, bool end_inclusive, const WindowSpec& spec);

enum class GazeDirection : std::uint8_t { Screen, Away, Unknown };

/// Horizontal pupil position relative to the eye corners; Screen inside the
/// configured centre band.
GazeDirection gaze_direction(const EyeObservation& eye, std::optional<Point2D> pupil, const Config& cfg);

/// Screen iff every classified eye says Screen; Unknown iff neither eye was
/// classified.
GazeDirection combine_gaze(GazeDirection left, GazeDirection right) noexcept;

/// Fraction of known frames looking at the screen; nullopt with no known frames.
std::optional<double> gaze_window_score(std::span<const GazeDirection> frames) noexcept;

} // namespace attnpipe
