#include <gtest/gtest.h>

#include <thread>

#include "support/net_client.hpp"
#include "vivo/control_api.hpp"
#include "vivo/engine.hpp"

using namespace vivo;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

MappingState shipped_mapping()
{
    return load_config(std::string(VIVO_SOURCE_DIR) + "/config/default.json").mapping;
}

struct Server {
    explicit Server(MappingState m, ControlHooks hooks = {}, double hz = 20.0)
        : store(std::move(m)), server(Endpoint{"127.0.0.1", 0}, store, std::move(hooks), hz)
    {
    }
    std::uint16_t port() const { return server.port(); }
    MappingStore store;
    ControlServer server;
};

} // namespace

TEST(ControlServer, GetPutUnchangedMappingIsByteIdentical)
{
    Server s(shipped_mapping());
    const net::Reply first = net::get(s.port(), "/api/mapping");
    ASSERT_EQ(first.status, 200);
    const net::Reply put = net::put(s.port(), "/api/mapping", first.body);
    ASSERT_EQ(put.status, 200);
    EXPECT_EQ(put.body, first.body);
    EXPECT_EQ(net::get(s.port(), "/api/mapping").body, first.body);
}

TEST(ControlServer, ToggleTwiceRestoresState)
{
    Server s(shipped_mapping());
    const std::string original = net::get(s.port(), "/api/mapping").body;
    Json j = Json::parse(original);
    const double g = j["matrix"][4][0].get<double>();
    j["matrix"][4][0] = 1.0 - g;
    ASSERT_EQ(net::put(s.port(), "/api/mapping", j.dump()).status, 200);
    EXPECT_NE(net::get(s.port(), "/api/mapping").body, original);
    j["matrix"][4][0] = g;
    ASSERT_EQ(net::put(s.port(), "/api/mapping", j.dump()).status, 200);
    EXPECT_EQ(net::get(s.port(), "/api/mapping").body, original);
}

TEST(ControlServer, ErrorsAreJson)
{
    Server s(shipped_mapping());
    const net::Reply bad = net::put(s.port(), "/api/mapping", "{not json");
    EXPECT_EQ(bad.status, 400);
    EXPECT_TRUE(Json::parse(bad.body).contains("error"));
    EXPECT_EQ(net::post(s.port(), "/api/presets/missing/recall").status, 404);
    EXPECT_EQ(net::get(s.port(), "/api/nothing").status, 404);
}

TEST(ControlServer, RecallRampReachesMidpointOnTime)
{
    MappingState start = shipped_mapping();
    for (double& g : start.matrix.gains())
        g = 0.0;
    Server s(start);

    MappingState target = start;
    target.matrix.at(0, 0) = 1.0;
    const Preset p = make_preset("bright", target);
    ASSERT_EQ(net::post(s.port(), "/api/presets", Json(p).dump()).status, 201);

    const auto t0 = Clock::now();
    ASSERT_EQ(net::post(s.port(), "/api/presets/bright/recall?ramp_ms=1000").status, 200);

    // Sample the live gain until the ramp finishes; find where it crosses 0.5.
    std::vector<std::pair<double, double>> samples;  // (ms since request, gain)
    for (;;) {
        const double g = Json::parse(net::get(s.port(), "/api/mapping").body)["matrix"][0][0].get<double>();
        samples.emplace_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count(), g);
        if (g >= 1.0 || samples.back().first > 3000.0)
            break;
        std::this_thread::sleep_for(10ms);
    }
    ASSERT_EQ(samples.back().second, 1.0);
    double crossing = -1.0;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const auto [ta, ga] = samples[k - 1];
        const auto [tb, gb] = samples[k];
        if (ga < 0.5 && gb >= 0.5) {
            crossing = ta + (0.5 - ga) / (gb - ga) * (tb - ta);
            break;
        }
    }
    EXPECT_NEAR(crossing, 500.0, 100.0);
    for (std::size_t k = 1; k < samples.size(); ++k)
        EXPECT_GE(samples[k].second, samples[k - 1].second);
}

TEST(ControlServer, MonitorStreamsAtConfiguredRate)
{
    ControlHooks hooks;
    hooks.latest_frame = [] { return Json{{"frame", 1}, {"warmth", 0.25}}; };
    Server s(shipped_mapping(), hooks, 20.0);
    const auto msgs = net::read_monitor(s.port(), 21);
    ASSERT_EQ(msgs.size(), 21u);
    const double span = std::chrono::duration<double>(msgs.back().first - msgs.front().first).count();
    EXPECT_GE(20.0 / span, 10.0);
    const Json payload = Json::parse(msgs.back().second);
    EXPECT_EQ(payload["descriptors"]["warmth"], 0.25);
    EXPECT_EQ(payload["mapping"]["matrix"], Json(s.store.snapshot()->matrix));
    EXPECT_FALSE(payload["mapping"]["ramping"].get<bool>());
}

TEST(ControlServer, StopClosesOpenMonitors)
{
    auto s = std::make_unique<Server>(shipped_mapping(), ControlHooks{}, 50.0);
    const std::uint16_t port = s->port();
    std::thread reader([port] {
        try {
            net::read_monitor(port, 1000000, 10s);
        } catch (const std::exception&) {
        }
    });
    std::this_thread::sleep_for(200ms);
    const auto t0 = Clock::now();
    s.reset();
    reader.join();
    EXPECT_LT(Clock::now() - t0, 2s);
}

TEST(ControlServer, ConcurrentClients)
{
    Server s(shipped_mapping());
    const std::string expected = net::get(s.port(), "/api/mapping").body;
    std::vector<std::thread> clients;
    std::atomic<int> good{0};
    for (int c = 0; c < 4; ++c) {
        clients.emplace_back([&] {
            for (int k = 0; k < 10; ++k) {
                if (net::get(s.port(), "/api/mapping").body == expected)
                    ++good;
            }
        });
    }
    for (auto& t : clients)
        t.join();
    EXPECT_EQ(good.load(), 40);
}
