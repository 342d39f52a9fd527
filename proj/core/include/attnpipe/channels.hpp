#pragma once

// Per-channel stream processors. Each processor owns the accumulators of one
// scoring channel, consumes records in canonical order and reports every
// window exactly once, in index order, once the window can no longer change.

#include "attnpipe/context_signals.hpp"
#include "attnpipe/fusion.hpp"
#include "attnpipe/ocular.hpp"
#include "attnpipe/session_io.hpp"

#include <map>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace attnpipe {

struct ChannelReport {
    ChannelId channel;
    WindowIndex window;
    std::optional<double> score;
};

struct AlertClosed {
    Timestamp closed_since;
    double duration;
};

using ChannelOutput = std::variant<ChannelReport, AlertEvent, AlertClosed>;

class ChannelProcessor {
public:
    ChannelProcessor(ChannelId id, const Config& cfg) : id_(id), cfg_(cfg) {}
    virtual ~ChannelProcessor() = default;

    ChannelId id() const noexcept { return id_; }
    virtual bool wants(RecordKind kind) const noexcept = 0;

    /// Records must arrive in canonical order with t >= window origin.
    virtual void consume(const FeatureRecord& rec, std::vector<ChannelOutput>& out) = 0;

    /// Reports every window that ends at or before the watermark and that
    /// the channel itself is not holding back.
    void advance(Timestamp watermark, std::vector<ChannelOutput>& out);

    /// End of stream: reports all windows up to and including `last_window`.
    void finish(WindowIndex last_window, Timestamp stream_end, std::vector<ChannelOutput>& out);

protected:
    virtual std::optional<double> take_window(WindowIndex w) = 0;
    /// Earliest time whose window must stay open; +inf when nothing is held.
    virtual Timestamp hold() const noexcept;
    virtual void on_finish(Timestamp /*stream_end*/, std::vector<ChannelOutput>& /*out*/) {}

    const Config& cfg() const noexcept { return cfg_; }
    WindowIndex window_of(Timestamp t) const { return window_index(t, cfg_.window); }

private:
    void emit(WindowIndex w, std::vector<ChannelOutput>& out);

    ChannelId id_;
    const Config& cfg_;
    WindowIndex next_window_ = 0;
};

/// Eye state per landmarks frame feeds the blink tracker; windows overlapped
/// by a drowsy closure score 0.
class BlinkProcessor final : public ChannelProcessor {
public:
    explicit BlinkProcessor(const Config& cfg) : ChannelProcessor(ChannelId::Blink, cfg) {}
    bool wants(RecordKind k) const noexcept override { return k == RecordKind::Landmarks; }
    void consume(const FeatureRecord& rec, std::vector<ChannelOutput>& out) override;

    const BlinkTrackerState& tracker() const noexcept { return tracker_; }

protected:
    std::optional<double> take_window(WindowIndex w) override;
    Timestamp hold() const noexcept override;
    void on_finish(Timestamp stream_end, std::vector<ChannelOutput>& out) override;

private:
    bool drowsy(WindowIndex w) const noexcept;

    BlinkTrackerState tracker_;
    std::map<WindowIndex, bool> observed_;
    std::vector<WindowRange> drowsy_runs_;
    std::optional<WindowIndex> open_drowsy_from_;
    std::vector<BlinkEvent> scratch_;
};

class GazeProcessor final : public ChannelProcessor {
public:
    explicit GazeProcessor(const Config& cfg) : ChannelProcessor(ChannelId::Gaze, cfg) {}
    bool wants(RecordKind k) const noexcept override {
        return k == RecordKind::Landmarks || k == RecordKind::Pupils;
    }
    void consume(const FeatureRecord& rec, std::vector<ChannelOutput>& out) override;

protected:
    std::optional<double> take_window(WindowIndex w) override;

private:
    std::optional<std::pair<Timestamp, EyePair>> last_eyes_;
    std::map<WindowIndex, std::vector<GazeDirection>> frames_;
};

class EmotionProcessor final : public ChannelProcessor {
public:
    explicit EmotionProcessor(const Config& cfg) : ChannelProcessor(ChannelId::Emotion, cfg) {}
    bool wants(RecordKind k) const noexcept override { return k == RecordKind::Emotion; }
    void consume(const FeatureRecord& rec, std::vector<ChannelOutput>& out) override;

protected:
    std::optional<double> take_window(WindowIndex w) override;

private:
    std::map<WindowIndex, std::vector<EmotionLabel>> labels_;
};

class PostureProcessor final : public ChannelProcessor {
public:
    explicit PostureProcessor(const Config& cfg) : ChannelProcessor(ChannelId::Posture, cfg) {}
    bool wants(RecordKind k) const noexcept override { return k == RecordKind::Pose; }
    void consume(const FeatureRecord& rec, std::vector<ChannelOutput>& out) override;

protected:
    std::optional<double> take_window(WindowIndex w) override;

private:
    std::optional<PoseFrame> prev_;
    std::map<WindowIndex, std::vector<double>> displacements_;
};

class NoiseProcessor final : public ChannelProcessor {
public:
    explicit NoiseProcessor(const Config& cfg) : ChannelProcessor(ChannelId::Noise, cfg) {}
    bool wants(RecordKind k) const noexcept override { return k == RecordKind::Audio; }
    void consume(const FeatureRecord& rec, std::vector<ChannelOutput>& out) override;

protected:
    std::optional<double> take_window(WindowIndex w) override;

private:
    std::map<WindowIndex, std::vector<double>> samples_;
};

/// One processor per scoring channel, in ChannelId order.
std::vector<std::unique_ptr<ChannelProcessor>> make_channel_processors(const Config& cfg);

} // namespace attnpipe
