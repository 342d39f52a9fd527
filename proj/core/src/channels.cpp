#include "attnpipe/channels.hpp"

#include "attnpipe/context_signals.hpp"

#include <algorithm>
#include <limits>

namespace attnpipe {

namespace {

template <typename Map>
auto take(Map& m, WindowIndex w) {
    typename Map::mapped_type v{};
    if (auto it = m.find(w); it != m.end()) {
        v = std::move(it->second);
        m.erase(it);
    }
    return v;
}

} // namespace

Timestamp ChannelProcessor::hold() const noexcept {
    return std::numeric_limits<double>::infinity();
}

void ChannelProcessor::emit(WindowIndex w, std::vector<ChannelOutput>& out) {
    out.emplace_back(ChannelReport{id_, w, take_window(w)});
}

void ChannelProcessor::advance(Timestamp watermark, std::vector<ChannelOutput>& out) {
    Timestamp limit = std::min(watermark, hold());
    while (cfg_.window.end(next_window_) <= limit) {
        emit(next_window_, out);
        ++next_window_;
    }
}

void ChannelProcessor::finish(WindowIndex last_window, Timestamp stream_end, std::vector<ChannelOutput>& out) {
    on_finish(stream_end, out);
    while (next_window_ <= last_window) {
        emit(next_window_, out);
        ++next_window_;
    }
}

// Blink

void BlinkProcessor::consume(const FeatureRecord& rec, std::vector<ChannelOutput>& out) {
    const auto* lm = std::get_if<LandmarksPayload>(&rec.payload);
    if (!lm) return;
    auto eyes = eyes_from_landmarks(*lm);
    auto state = eye_state(eyes.left, eyes.right, cfg());
    if (!state) return;

    observed_[window_of(rec.t)] = true;
    scratch_.clear();
    blink_feed(tracker_, rec.t, *state, cfg(), scratch_);
    for (const auto& ev : scratch_) {
        if (const auto* on = std::get_if<DrowsinessOnset>(&ev)) {
            open_drowsy_from_ = window_of(on->closed_since);
            out.emplace_back(AlertEvent{on->t, on->closed_since, on->duration, AlertKind::Drowsiness});
        } else if (const auto* end = std::get_if<DrowsinessEnded>(&ev)) {
            drowsy_runs_.push_back(run_windows(end->closed_since, end->t, false, cfg().window));
            open_drowsy_from_.reset();
            out.emplace_back(AlertClosed{end->closed_since, end->duration});
        }
    }
}

bool BlinkProcessor::drowsy(WindowIndex w) const noexcept {
    if (open_drowsy_from_ && w >= *open_drowsy_from_) return true;
    return std::any_of(drowsy_runs_.begin(), drowsy_runs_.end(),
                       [w](const WindowRange& r) { return r.first <= w && w <= r.last; });
}

std::optional<double> BlinkProcessor::take_window(WindowIndex w) {
    bool is_drowsy = drowsy(w);
    bool seen = take(observed_, w);
    int blinks = take(tracker_.blinks_by_window, w);
    std::erase_if(drowsy_runs_, [w](const WindowRange& r) { return r.last <= w; });
    if (is_drowsy) return 0.0;
    if (!seen) return std::nullopt;
    return blink_rate_score(blinks, cfg());
}

Timestamp BlinkProcessor::hold() const noexcept {
    // A closure that has not yet resolved into a blink or drowsiness may
    // still change the score of the window it started in.
    if (tracker_.current == EyeState::Closed && !tracker_.drowsy_alerted) return *tracker_.closed_since;
    return ChannelProcessor::hold();
}

void BlinkProcessor::on_finish(Timestamp stream_end, std::vector<ChannelOutput>& out) {
    if (!open_drowsy_from_) return;
    // An unterminated drowsy closure lasts until the stream ends.
    Timestamp since = *tracker_.closed_since;
    drowsy_runs_.push_back({*open_drowsy_from_, std::max(*open_drowsy_from_, window_of(stream_end))});
    open_drowsy_from_.reset();
    out.emplace_back(AlertClosed{since, *tracker_.last_t - since});
}

// Gaze

void GazeProcessor::consume(const FeatureRecord& rec, std::vector<ChannelOutput>&) {
    if (const auto* lm = std::get_if<LandmarksPayload>(&rec.payload)) {
        last_eyes_ = {rec.t, eyes_from_landmarks(*lm)};
        return;
    }
    const auto* pupils = std::get_if<PupilsPayload>(&rec.payload);
    if (!pupils) return;
    GazeDirection dir = GazeDirection::Unknown;
    if (last_eyes_ && rec.t - last_eyes_->first <= cfg().gaze_pairing_max_gap) {
        const EyePair& eyes = last_eyes_->second;
        dir = combine_gaze(gaze_direction(eyes.left, pupils->left, cfg()),
                           gaze_direction(eyes.right, pupils->right, cfg()));
    }
    frames_[window_of(rec.t)].push_back(dir);
}

std::optional<double> GazeProcessor::take_window(WindowIndex w) {
    auto frames = take(frames_, w);
    return gaze_window_score(frames);
}

// Emotion

void EmotionProcessor::consume(const FeatureRecord& rec, std::vector<ChannelOutput>&) {
    if (const auto* e = std::get_if<EmotionPayload>(&rec.payload)) labels_[window_of(rec.t)].push_back(e->label);
}

std::optional<double> EmotionProcessor::take_window(WindowIndex w) {
    auto labels = take(labels_, w);
    return emotion_window_score(labels, cfg().emotion_score_table);
}

// Posture

void PostureProcessor::consume(const FeatureRecord& rec, std::vector<ChannelOutput>&) {
    const auto* pose = std::get_if<PosePayload>(&rec.payload);
    if (!pose) return;
    PoseFrame cur{rec.t, pose->kp};
    if (prev_ && prev_->t < cur.t) {
        if (auto d = posture_displacement(*prev_, cur, cfg())) displacements_[window_of(cur.t)].push_back(*d);
    }
    prev_ = cur;
}

std::optional<double> PostureProcessor::take_window(WindowIndex w) {
    auto d = take(displacements_, w);
    return posture_window_score(d, cfg());
}

// Noise

void NoiseProcessor::consume(const FeatureRecord& rec, std::vector<ChannelOutput>&) {
    if (const auto* a = std::get_if<AudioPayload>(&rec.payload)) samples_[window_of(rec.t)].push_back(a->db);
}

std::optional<double> NoiseProcessor::take_window(WindowIndex w) {
    auto s = take(samples_, w);
    return noise_score(s, cfg());
}

std::vector<std::unique_ptr<ChannelProcessor>> make_channel_processors(const Config& cfg) {
    std::vector<std::unique_ptr<ChannelProcessor>> v;
    v.push_back(std::make_unique<BlinkProcessor>(cfg));
    v.push_back(std::make_unique<GazeProcessor>(cfg));
    v.push_back(std::make_unique<EmotionProcessor>(cfg));
    v.push_back(std::make_unique<PostureProcessor>(cfg));
    v.push_back(std::make_unique<NoiseProcessor>(cfg));
    return v;
}

} // namespace attnpipe
