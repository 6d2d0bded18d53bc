#pragma once

// Small blocking clients for driving the servers from tests.

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <string>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "vivo/osc.hpp"
#include "vivo/osc_transport.hpp"

namespace vivo::net {

struct Reply {
    int status = 0;
    std::string body;
};

inline Reply http_call(std::uint16_t port, boost::beast::http::verb method, const std::string& target,
                       const std::string& body = {})
{
    namespace http = boost::beast::http;
    boost::asio::io_context io;
    boost::asio::ip::tcp::socket socket(io);
    socket.connect({boost::asio::ip::make_address("127.0.0.1"), port});
    http::request<http::string_body> req{method, target, 11};
    req.set(http::field::host, "127.0.0.1");
    if (!body.empty()) {
        req.set(http::field::content_type, "application/json");
        req.body() = body;
    }
    req.keep_alive(false);
    req.prepare_payload();
    http::write(socket, req);
    boost::beast::flat_buffer buffer;
    http::response<http::string_body> res;
    http::read(socket, buffer, res);
    boost::system::error_code ec;
    socket.shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
    return {static_cast<int>(res.result_int()), res.body()};
}

inline Reply get(std::uint16_t port, const std::string& target)
{
    return http_call(port, boost::beast::http::verb::get, target);
}

inline Reply put(std::uint16_t port, const std::string& target, const std::string& body)
{
    return http_call(port, boost::beast::http::verb::put, target, body);
}

inline Reply post(std::uint16_t port, const std::string& target, const std::string& body = {})
{
    return http_call(port, boost::beast::http::verb::post, target, body);
}

/// Opens /api/monitor and reads messages until `count` arrived or `limit` passed.
/// Returns the payloads with their arrival times.
inline std::vector<std::pair<std::chrono::steady_clock::time_point, std::string>>
read_monitor(std::uint16_t port, std::size_t count, std::chrono::milliseconds limit = std::chrono::seconds(5))
{
    namespace websocket = boost::beast::websocket;
    boost::asio::io_context io;
    boost::asio::ip::tcp::socket socket(io);
    socket.connect({boost::asio::ip::make_address("127.0.0.1"), port});
    websocket::stream<boost::asio::ip::tcp::socket> ws(std::move(socket));
    ws.handshake("127.0.0.1:" + std::to_string(port), "/api/monitor");
    std::vector<std::pair<std::chrono::steady_clock::time_point, std::string>> out;
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (out.size() < count && std::chrono::steady_clock::now() < deadline) {
        boost::beast::flat_buffer buffer;
        ws.read(buffer);
        out.emplace_back(std::chrono::steady_clock::now(), boost::beast::buffers_to_string(buffer.data()));
    }
    boost::system::error_code ec;
    ws.close(websocket::close_code::normal, ec);
    return out;
}

/// UDP listener that keeps every decoded message.
class Collector {
public:
    Collector()
        : receiver_(0, [this](Datagram&& d) {
              std::lock_guard lock(mutex_);
              for (osc::Message& m : osc::messages_of(std::move(d.packet))) {
                  messages_.push_back(std::move(m));
                  arrivals_.push_back(d.arrival);
              }
              ++packets_;
              cv_.notify_all();
          })
    {
    }

    std::uint16_t port() const { return receiver_.port(); }
    Endpoint endpoint() const { return {"127.0.0.1", port()}; }

    bool wait_messages(std::size_t n, std::chrono::milliseconds limit = std::chrono::seconds(3))
    {
        std::unique_lock lock(mutex_);
        return cv_.wait_for(lock, limit, [&] { return messages_.size() >= n; });
    }

    std::vector<osc::Message> messages() const
    {
        std::lock_guard lock(mutex_);
        return messages_;
    }

    std::vector<std::chrono::steady_clock::time_point> arrivals() const
    {
        std::lock_guard lock(mutex_);
        return arrivals_;
    }

    std::size_t packets() const
    {
        std::lock_guard lock(mutex_);
        return packets_;
    }

    std::uint64_t malformed() const { return receiver_.malformed(); }

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::vector<osc::Message> messages_;
    std::vector<std::chrono::steady_clock::time_point> arrivals_;
    std::size_t packets_ = 0;
    UdpReceiver receiver_;
};

} // namespace vivo::net
