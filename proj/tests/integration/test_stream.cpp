#include <gtest/gtest.h>

#include <fcntl.h>
#include <unistd.h>

#include <thread>

#include "support/net_client.hpp"
#include "support/synthetic.hpp"
#include "vivo/stream.hpp"

using namespace vivo;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int W = 32, H = 24;

EngineConfig small_config()
{
    EngineConfig cfg = load_config(std::string(VIVO_SOURCE_DIR) + "/config/default.json");
    cfg.input.width = W;
    cfg.input.height = H;
    cfg.api_bind.reset();
    cfg.osc_target.reset();
    return cfg;
}

struct Pipe {
    Pipe()
    {
        int fds[2];
        if (::pipe(fds) != 0)
            throw std::runtime_error("pipe");
        read_fd = fds[0];
        write_fd = fds[1];
    }
    ~Pipe()
    {
        close_write();
        if (read_fd >= 0)
            ::close(read_fd);
    }
    void close_write()
    {
        if (write_fd >= 0)
            ::close(write_fd);
        write_fd = -1;
    }
    void write_all(const std::vector<std::uint8_t>& bytes) const
    {
        std::size_t done = 0;
        while (done < bytes.size()) {
            const ssize_t n = ::write(write_fd, bytes.data() + done, bytes.size() - done);
            if (n <= 0)
                throw std::runtime_error("write");
            done += static_cast<std::size_t>(n);
        }
    }
    int read_fd = -1;
    int write_fd = -1;
};

/// Feeds `n` frames one at a time, waiting for each to come out of the sink.
std::vector<std::vector<osc::Message>> lockstep_run(const EngineConfig& cfg, int n, std::uint64_t seed)
{
    Pipe pipe;
    std::mutex m;
    std::condition_variable cv;
    std::vector<std::vector<osc::Message>> frames;
    StreamOptions opts;
    opts.pace = false;
    opts.extra_sink = [&](const std::vector<osc::Message>& msgs) {
        std::lock_guard lock(m);
        frames.push_back(msgs);
        cv.notify_all();
    };
    std::thread writer([&] {
        for (int k = 0; k < n; ++k) {
            pipe.write_all(synth::pack_rgb24(synth::stream_frame(W, H, k, seed)));
            std::unique_lock lock(m);
            cv.wait_for(lock, 5s, [&] { return frames.size() > static_cast<std::size_t>(k); });
        }
        pipe.close_write();
    });
    std::atomic<bool> stop{false};
    const MetricsSnapshot snap = run_stream(cfg, pipe.read_fd, stop, opts);
    writer.join();
    EXPECT_EQ(snap.frames_processed, static_cast<std::uint64_t>(n));
    EXPECT_EQ(snap.frames_dropped, 0u);
    return frames;
}

} // namespace

TEST(Stream, ReplayIsDeterministic)
{
    const EngineConfig cfg = small_config();
    const auto a = lockstep_run(cfg, 20, 7);
    const auto b = lockstep_run(cfg, 20, 7);
    ASSERT_EQ(a.size(), 20u);
    EXPECT_EQ(a, b);
    // The moving blob produces motion after the first frame.
    EXPECT_NE(a[0], a[1]);
}

TEST(Stream, PacedInputNeverExceedsDeclaredRate)
{
    EngineConfig cfg = small_config();
    cfg.input.fps = 30.0;
    Pipe pipe;
    std::thread writer([&] {
        for (int k = 0; k < 45; ++k)
            pipe.write_all(synth::pack_rgb24(synth::stream_frame(W, H, k, 1)));
        pipe.close_write();
    });
    std::atomic<bool> stop{false};
    const auto t0 = Clock::now();
    const MetricsSnapshot snap = run_stream(cfg, pipe.read_fd, stop);
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    writer.join();
    EXPECT_EQ(snap.frames_in, 45u);
    EXPECT_EQ(snap.frames_processed + snap.frames_dropped, 45u);
    EXPECT_GE(elapsed, 44.0 / 30.0 - 0.05);
    EXPECT_LE(snap.fps, 31.0);
}

TEST(Stream, StopFlagEndsAnIdleStream)
{
    const EngineConfig cfg = small_config();
    Pipe pipe;
    std::atomic<bool> stop{false};
    std::thread stopper([&] {
        std::this_thread::sleep_for(200ms);
        stop = true;
    });
    const auto t0 = Clock::now();
    const MetricsSnapshot snap = run_stream(cfg, pipe.read_fd, stop);
    stopper.join();
    EXPECT_LT(Clock::now() - t0, 2s);
    EXPECT_EQ(snap.frames_processed, 0u);
}

TEST(Stream, PartialTrailingFrameIsIgnored)
{
    const EngineConfig cfg = small_config();
    Pipe pipe;
    std::thread writer([&] {
        pipe.write_all(synth::pack_rgb24(synth::stream_frame(W, H, 0, 1)));
        pipe.write_all(std::vector<std::uint8_t>(100, 0));
        pipe.close_write();
    });
    std::atomic<bool> stop{false};
    StreamOptions opts;
    opts.pace = false;
    const MetricsSnapshot snap = run_stream(cfg, pipe.read_fd, stop, opts);
    writer.join();
    EXPECT_EQ(snap.frames_in, 1u);
    EXPECT_EQ(snap.frames_processed, 1u);
}

TEST(Stream, SendsOscToTarget)
{
    EngineConfig cfg = small_config();
    net::Collector rx;
    cfg.osc_target = rx.endpoint();
    Pipe pipe;
    std::thread writer([&] {
        for (int k = 0; k < 3; ++k)
            pipe.write_all(synth::pack_rgb24(Frame::uniform(W, H, {1.0, 0.0, 0.0})));
        pipe.close_write();
    });
    std::atomic<bool> stop{false};
    StreamOptions opts;
    opts.pace = true;
    const MetricsSnapshot snap = run_stream(cfg, pipe.read_fd, stop, opts);
    writer.join();
    EXPECT_EQ(snap.frames_processed, 3u);
    EXPECT_EQ(snap.packets_sent, 3u);
    ASSERT_TRUE(rx.wait_messages(1));
    bool saw_warmness = false, saw_attack = false;
    for (const osc::Message& m : rx.messages()) {
        if (m.address == "/vivo/warmness") {
            saw_warmness = true;
            EXPECT_EQ(m.args[0], osc::Value(0.765625f));
        }
        saw_attack = saw_attack || m.address == "/synth/attack";
    }
    EXPECT_TRUE(saw_warmness);
    EXPECT_TRUE(saw_attack);
}

TEST(Stream, MonitorFollowsLiveEngine)
{
    EngineConfig cfg = small_config();
    cfg.api_bind = Endpoint{"127.0.0.1", 0};
    cfg.monitor_hz = 20.0;
    Pipe pipe;
    std::atomic<std::uint16_t> port{0};
    std::atomic<bool> stop{false};
    StreamOptions opts;
    opts.on_api_ready = [&](std::uint16_t p) { port = p; };

    std::thread writer([&] {
        const auto frame = synth::pack_rgb24(Frame::uniform(W, H, {0.2, 0.4, 0.9}));
        while (!stop) {
            try {
                pipe.write_all(frame);
            } catch (const std::exception&) {
                return;
            }
            std::this_thread::sleep_for(33ms);
        }
    });
    std::vector<std::pair<Clock::time_point, std::string>> msgs;
    std::thread client([&] {
        while (port == 0)
            std::this_thread::sleep_for(5ms);
        std::this_thread::sleep_for(200ms);
        try {
            msgs = net::read_monitor(port, 21);
        } catch (const std::exception&) {
        }
        stop = true;
    });
    run_stream(cfg, pipe.read_fd, stop, opts);
    client.join();
    writer.join();

    ASSERT_EQ(msgs.size(), 21u);
    const double span = std::chrono::duration<double>(msgs.back().first - msgs.front().first).count();
    EXPECT_GE(20.0 / span, 10.0);
    const Json last = Json::parse(msgs.back().second);
    ASSERT_FALSE(last["descriptors"].is_null());
    EXPECT_TRUE(last["mapping"].contains("matrix"));
}
