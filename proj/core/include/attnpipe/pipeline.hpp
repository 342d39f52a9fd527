#pragma once

// Streaming attention engine. Records are pushed in arrival order (disordered
// by at most the watermark skew); the engine restores canonical order, fans
// records out to the five channel processors and assembles the timeline
// behind a per-window barrier. Sequential and concurrent execution produce
// identical timelines.

#include "attnpipe/fusion.hpp"
#include "attnpipe/model.hpp"
#include "attnpipe/session_io.hpp"

#include <map>
#include <memory>
#include <vector>

namespace attnpipe {

enum class Execution : std::uint8_t { Sequential, Concurrent };

struct Timeline {
    SessionMeta meta;
    std::vector<AttentionPoint> points;
    std::vector<AlertEvent> alerts;
    AttendanceLedger attendance;
    /// Mean observed attention per window, from `observed` records.
    std::map<WindowIndex, double> observed;

    friend bool operator==(const Timeline&, const Timeline&) = default;
};

struct EngineOptions {
    Execution execution = Execution::Sequential;
    /// Released records are handed to channel workers in batches of at most
    /// this size. 1 gives the lowest latency for live rendering.
    std::size_t max_batch = 1024;
};

class Engine {
public:
    Engine(Config cfg, SessionMeta meta, EngineOptions options = {}, EventSink sink = {});
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Throws ContractError for a record behind the watermark.
    void push(FeatureRecord rec);

    /// End of stream. Finalizes every window and returns the timeline.
    /// Rethrows the first error raised by a worker.
    Timeline finish();

private:
    class Impl;
    std::unique_ptr<Impl> impl_;
};

/// Runs a whole session through the engine.
Timeline build_timeline(const Session& session, const Config& cfg, Execution execution = Execution::Sequential,
                        const EventSink& sink = {});

/// Drains a record source (live or replayed) through the engine.
Timeline run_source(RecordSource& source, const Config& cfg, EngineOptions options = {},
                    const EventSink& sink = {});

/// Mean of the `observed` records falling in each window.
std::map<WindowIndex, double> observed_by_window(const Session& session, const WindowSpec& window);

} // namespace attnpipe
