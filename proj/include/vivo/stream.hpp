#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "vivo/control_api.hpp"
#include "vivo/engine.hpp"
#include "vivo/frame_source.hpp"
#include "vivo/mapping.hpp"
#include "vivo/osc_transport.hpp"

namespace vivo {

struct StreamOptions {
    /// Hold ingestion to the configured fps. Off: take frames as fast as the
    /// pipe delivers them.
    bool pace = true;
    /// Called once the control API listens (port is resolved when bind asks for 0).
    std::function<void(std::uint16_t)> on_api_ready;
    /// Receives every frame's messages in addition to (or instead of) UDP.
    Pipeline::Sink extra_sink;
};

namespace internal {

/// Single-slot mailbox between ingestion and analysis: the newest frame
/// wins and every overwritten frame counts as a drop.
class LatestFrame {
public:
    /// Returns true when an unprocessed frame was replaced.
    bool put(Frame f)
    {
        bool replaced = false;
        {
            std::lock_guard lock(mutex_);
            replaced = slot_.has_value();
            slot_ = std::move(f);
        }
        cv_.notify_one();
        return replaced;
    }

    void close()
    {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    /// Blocks for the next frame; nullopt once closed and drained, or on stop.
    std::optional<Frame> take(const std::atomic<bool>& stop)
    {
        std::unique_lock lock(mutex_);
        for (;;) {
            if (slot_) {
                std::optional<Frame> f = std::move(slot_);
                slot_.reset();
                return f;
            }
            if (closed_ || stop.load())
                return std::nullopt;
            cv_.wait_for(lock, std::chrono::milliseconds(50));
        }
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::optional<Frame> slot_;
    bool closed_ = false;
};

inline void persist_config(const EngineConfig& base, MappingStore& store)
{
    if (!base.persist || base.source_path.empty())
        return;
    EngineConfig cfg = base;
    cfg.mapping = *store.snapshot();
    cfg.presets = store.presets();
    std::ofstream os(cfg.source_path);
    if (!os) {
        spdlog::warn("cannot persist config to {}", cfg.source_path);
        return;
    }
    os << config_to_json(cfg).dump(2) << '\n';
}

} // namespace internal

/// Live mode: reads raw frames from `fd` until EOF or `stop`, analyses them
/// in order, emits OSC and serves the control API. Returns the final metrics.
inline MetricsSnapshot run_stream(const EngineConfig& cfg, int fd, const std::atomic<bool>& stop,
                                  const StreamOptions& opts = {})
{
    cfg.validate();
    MappingStore store(cfg.mapping, cfg.presets);
    PipelineMetrics metrics;

    std::unique_ptr<UdpSender> sender;
    if (cfg.osc_target) {
        sender = std::make_unique<UdpSender>(*cfg.osc_target, cfg.osc_queue);
        spdlog::info("sending OSC to {}", cfg.osc_target->str());
    }

    std::mutex latest_mutex;
    Json latest = nullptr;

    std::unique_ptr<ControlServer> server;
    if (cfg.api_bind) {
        ControlHooks hooks;
        hooks.latest_frame = [&] {
            std::lock_guard lock(latest_mutex);
            return latest;
        };
        hooks.metrics = [&] {
            if (sender)
                metrics.set_sender_stats(sender->stats());
            return Json(metrics.snapshot());
        };
        hooks.changed = [&] { internal::persist_config(cfg, store); };
        server = std::make_unique<ControlServer>(*cfg.api_bind, store, std::move(hooks), cfg.monitor_hz);
        spdlog::info("control API on {}:{}", cfg.api_bind->host, server->port());
        if (opts.on_api_ready)
            opts.on_api_ready(server->port());
    }

    Pipeline pipeline(cfg, store, [&](const std::vector<osc::Message>& messages) {
        if (sender)
            sender->send_frame(messages);
        if (opts.extra_sink)
            opts.extra_sink(messages);
    }, &metrics);

    internal::LatestFrame mailbox;
    std::atomic<bool> ingest_failed{false};
    std::thread ingest([&] {
        try {
            RawFrameReader reader(fd, cfg.input.width, cfg.input.height, cfg.input.pix, cfg.input.fps);
            Pacer pacer(cfg.input.fps);
            while (std::optional<Frame> f = reader.next(&stop)) {
                if (opts.pace)
                    pacer.wait();
                metrics.frame_in();
                if (mailbox.put(std::move(*f)))
                    metrics.frame_dropped();
            }
            if (reader.trailing_bytes() > 0)
                spdlog::warn("input ended inside a frame ({} of {} bytes)", reader.trailing_bytes(),
                             reader.frame_bytes());
        } catch (const std::exception& e) {
            spdlog::error("input: {}", e.what());
            ingest_failed = true;
        }
        mailbox.close();
    });

    std::uint64_t index = 0;
    while (std::optional<Frame> f = mailbox.take(stop)) {
        ProcessedFrame out = pipeline.push(std::move(*f));
        const Json payload = monitor_json(out, *store.snapshot(), index++);
        std::lock_guard lock(latest_mutex);
        latest = payload;
    }
    ingest.join();

    if (sender) {
        sender->flush();
        metrics.set_sender_stats(sender->stats());
    }
    if (server)
        server->stop();
    if (sender)
        sender->stop();
    if (ingest_failed)
        throw Error("input failed");
    return metrics.snapshot();
}

} // namespace vivo
