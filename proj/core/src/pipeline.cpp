#include "attnpipe/pipeline.hpp"

#include "attnpipe/channels.hpp"
#include "attnpipe/errors.hpp"
#include "blocking_queue.hpp"

#include <exception>
#include <mutex>
#include <thread>

namespace attnpipe {

namespace {

using RecordPtr = std::shared_ptr<const FeatureRecord>;

struct WorkerMsg {
    std::vector<RecordPtr> records;
    Timestamp watermark = -std::numeric_limits<double>::infinity();
    bool finish = false;
    WindowIndex last_window = -1;
    Timestamp stream_end = 0.0;
};

struct AssemblerMsg {
    std::vector<ChannelOutput> outputs;
    std::optional<Timestamp> session_end;
};

void apply_outputs(TimelineAssembler& assembler, const std::vector<ChannelOutput>& outputs) {
    for (const auto& o : outputs) {
        std::visit(
            [&](const auto& v) {
                using V = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<V, ChannelReport>)
                    assembler.report(v.channel, v.window, v.score);
                else if constexpr (std::is_same_v<V, AlertEvent>)
                    assembler.alert(v);
                else
                    assembler.alert_closed(v.closed_since, v.duration);
            },
            o);
    }
}

} // namespace

class Engine::Impl {
public:
    Impl(Config cfg, SessionMeta meta, EngineOptions options, EventSink sink)
        : cfg_(std::move(cfg)),
          meta_(std::move(meta)),
          options_(options),
          buffer_(cfg_.watermark_skew),
          processors_(make_channel_processors(cfg_)),
          assembler_(cfg_.window, cfg_.fixed_n, std::move(sink)) {
        cfg_.validate();
        if (options_.max_batch == 0) options_.max_batch = 1;
        if (meta_.duration_s > 0.0) assembler_.set_session_end(meta_.duration_s);
        if (options_.execution == Execution::Concurrent) start_workers();
    }

    ~Impl() { stop_workers(); }

    void push(FeatureRecord rec) {
        if (finished_) throw ContractError("engine: push after finish");
        buffer_.push(std::move(rec));
        buffer_.release([this](FeatureRecord r) { dispatch(std::move(r)); });
        if (auto wm = buffer_.watermark()) advance(*wm);
    }

    Timeline finish() {
        if (finished_) throw ContractError("engine: finish called twice");
        finished_ = true;
        buffer_.drain([this](FeatureRecord r) { dispatch(std::move(r)); });

        auto max_seen = buffer_.max_seen();
        Timestamp stream_end = max_seen ? std::max(*max_seen, cfg_.window.origin) : cfg_.window.origin;
        Timestamp session_end = meta_.duration_s > 0.0 ? meta_.duration_s : stream_end;
        WindowIndex last = -1;
        if (max_seen && *max_seen >= cfg_.window.origin) last = window_index(*max_seen, cfg_.window);
        if (meta_.duration_s > cfg_.window.origin) {
            WindowIndex k = window_index(meta_.duration_s, cfg_.window);
            if (cfg_.window.start(k) >= meta_.duration_s) --k;
            last = std::max(last, k);
        }

        if (options_.execution == Execution::Concurrent) {
            assembler_queue_.push(AssemblerMsg{{}, session_end});
            flush(true, last, stream_end);
            stop_workers();
            if (error_) std::rethrow_exception(error_);
        } else {
            assembler_.set_session_end(session_end);
            std::vector<ChannelOutput> out;
            for (auto& p : processors_) p->finish(last, stream_end, out);
            apply_outputs(assembler_, out);
        }
        assembler_.finish();

        Timeline tl;
        tl.meta = meta_;
        tl.points = assembler_.points();
        tl.alerts = assembler_.alerts();
        tl.attendance = attendance(identity_, meta_.subject, meta_.duration_s > 0.0 ? meta_.duration_s : stream_end,
                                   cfg_);
        for (const auto& [w, acc] : observed_) tl.observed[w] = acc.first / static_cast<double>(acc.second);
        return tl;
    }

private:
    void dispatch(FeatureRecord rec) {
        if (rec.t < cfg_.window.origin) return;
        switch (rec.kind()) {
        case RecordKind::Identity: {
            auto& id = std::get<IdentityPayload>(rec.payload);
            identity_.push_back({rec.t, id.subject, id.verified});
            return;
        }
        case RecordKind::Observed: {
            auto& acc = observed_[window_index(rec.t, cfg_.window)];
            acc.first += std::get<ObservedPayload>(rec.payload).att;
            ++acc.second;
            return;
        }
        default:
            break;
        }

        if (options_.execution == Execution::Sequential) {
            std::vector<ChannelOutput> out;
            for (auto& p : processors_)
                if (p->wants(rec.kind())) p->consume(rec, out);
            apply_outputs(assembler_, out);
            return;
        }

        auto ptr = std::make_shared<const FeatureRecord>(std::move(rec));
        for (std::size_t i = 0; i < processors_.size(); ++i)
            if (processors_[i]->wants(ptr->kind())) batches_[i].push_back(ptr);
        ++batched_;
    }

    void advance(Timestamp wm) {
        if (options_.execution == Execution::Sequential) {
            std::vector<ChannelOutput> out;
            for (auto& p : processors_) p->advance(wm, out);
            apply_outputs(assembler_, out);
            return;
        }
        watermark_ = wm;
        bool crossed = wm >= cfg_.window.end(flushed_window_);
        if (batched_ >= options_.max_batch || crossed) {
            if (wm >= cfg_.window.origin) flushed_window_ = window_index(wm, cfg_.window);
            flush(false, -1, 0.0);
        }
    }

    void flush(bool finish, WindowIndex last, Timestamp stream_end) {
        for (std::size_t i = 0; i < processors_.size(); ++i) {
            WorkerMsg msg;
            msg.records = std::move(batches_[i]);
            batches_[i].clear();
            msg.watermark = watermark_;
            msg.finish = finish;
            msg.last_window = last;
            msg.stream_end = stream_end;
            worker_queues_[i].push(std::move(msg));
        }
        batched_ = 0;
    }

    void record_error() {
        std::lock_guard lock(error_mu_);
        if (!error_) error_ = std::current_exception();
    }

    bool failed() {
        std::lock_guard lock(error_mu_);
        return static_cast<bool>(error_);
    }

    void start_workers() {
        batches_.resize(processors_.size());
        worker_queues_ = std::vector<detail::BlockingQueue<WorkerMsg>>(processors_.size());
        for (std::size_t i = 0; i < processors_.size(); ++i) {
            workers_.emplace_back([this, i] {
                ChannelProcessor& proc = *processors_[i];
                while (auto msg = worker_queues_[i].pop()) {
                    if (failed()) continue;
                    try {
                        AssemblerMsg out;
                        for (const auto& r : msg->records) proc.consume(*r, out.outputs);
                        if (msg->finish)
                            proc.finish(msg->last_window, msg->stream_end, out.outputs);
                        else
                            proc.advance(msg->watermark, out.outputs);
                        if (!out.outputs.empty()) assembler_queue_.push(std::move(out));
                    } catch (...) {
                        record_error();
                    }
                }
            });
        }
        assembler_thread_ = std::thread([this] {
            while (auto msg = assembler_queue_.pop()) {
                if (failed()) continue;
                try {
                    if (msg->session_end) assembler_.set_session_end(*msg->session_end);
                    apply_outputs(assembler_, msg->outputs);
                } catch (...) {
                    record_error();
                }
            }
        });
    }

    void stop_workers() {
        if (workers_.empty() && !assembler_thread_.joinable()) return;
        for (auto& q : worker_queues_) q.close();
        for (auto& t : workers_) t.join();
        workers_.clear();
        assembler_queue_.close();
        if (assembler_thread_.joinable()) assembler_thread_.join();
    }

    Config cfg_;
    SessionMeta meta_;
    EngineOptions options_;
    ReorderBuffer buffer_;
    std::vector<std::unique_ptr<ChannelProcessor>> processors_;
    TimelineAssembler assembler_;
    std::vector<IdentityEvent> identity_;
    std::map<WindowIndex, std::pair<double, std::size_t>> observed_;
    bool finished_ = false;

    // Concurrent execution only.
    std::vector<std::vector<RecordPtr>> batches_;
    std::size_t batched_ = 0;
    Timestamp watermark_ = -std::numeric_limits<double>::infinity();
    WindowIndex flushed_window_ = 0;
    std::vector<detail::BlockingQueue<WorkerMsg>> worker_queues_;
    detail::BlockingQueue<AssemblerMsg> assembler_queue_;
    std::vector<std::thread> workers_;
    std::thread assembler_thread_;
    std::mutex error_mu_;
    std::exception_ptr error_;
};

Engine::Engine(Config cfg, SessionMeta meta, EngineOptions options, EventSink sink)
    : impl_(std::make_unique<Impl>(std::move(cfg), std::move(meta), options, std::move(sink))) {}

Engine::~Engine() = default;

void Engine::push(FeatureRecord rec) {
    impl_->push(std::move(rec));
}

Timeline Engine::finish() {
    return impl_->finish();
}

Timeline build_timeline(const Session& session, const Config& cfg, Execution execution, const EventSink& sink) {
    Engine engine(cfg, session.meta, EngineOptions{execution, 1024}, sink);
    for (const auto& r : session.records) engine.push(r);
    return engine.finish();
}

Timeline run_source(RecordSource& source, const Config& cfg, EngineOptions options, const EventSink& sink) {
    Engine engine(cfg, source.meta(), options, sink);
    while (auto rec = source.next()) engine.push(std::move(*rec));
    return engine.finish();
}

std::map<WindowIndex, double> observed_by_window(const Session& session, const WindowSpec& window) {
    std::map<WindowIndex, std::pair<double, std::size_t>> acc;
    for (const auto& r : session.records) {
        if (r.kind() != RecordKind::Observed || r.t < window.origin) continue;
        auto& a = acc[window_index(r.t, window)];
        a.first += std::get<ObservedPayload>(r.payload).att;
        ++a.second;
    }
    std::map<WindowIndex, double> out;
    for (const auto& [w, a] : acc) out[w] = a.first / static_cast<double>(a.second);
    return out;
}

} // namespace attnpipe
