#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/udp.hpp>

#include <spdlog/spdlog.h>

#include "vivo/error.hpp"
#include "vivo/osc.hpp"

namespace vivo {

namespace asio = boost::asio;

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }
};

inline std::uint16_t parse_port(std::string_view text)
{
    int value = 0;
    if (text.empty() || text.size() > 5)
        throw Error("invalid port: '" + std::string(text) + "'");
    for (char c : text) {
        if (c < '0' || c > '9')
            throw Error("invalid port: '" + std::string(text) + "'");
        value = value * 10 + (c - '0');
    }
    if (value < 1 || value > 65535)
        throw Error("port out of range: " + std::string(text));
    return static_cast<std::uint16_t>(value);
}

/// "host:port", "[v6addr]:port" or a bare port (host defaults to 127.0.0.1).
inline Endpoint parse_endpoint(std::string_view text)
{
    Endpoint e;
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
        e.port = parse_port(text);
        return e;
    }
    std::string_view host = text.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']')
        host = host.substr(1, host.size() - 2);
    if (host.empty())
        throw Error("missing host in '" + std::string(text) + "'");
    e.host = std::string(host);
    e.port = parse_port(text.substr(colon + 1));
    return e;
}

struct SenderStats {
    std::uint64_t sent = 0;     // datagrams handed to the socket
    std::uint64_t dropped = 0;  // evicted by queue overflow
    std::uint64_t errors = 0;   // socket or resolution failures
    std::size_t queue_depth = 0;
};

/// Fire-and-forget UDP sender. enqueue() never blocks: the bounded queue
/// drops its oldest datagram on overflow. A background thread drains it.
class UdpSender {
public:
    explicit UdpSender(Endpoint target, std::size_t capacity = 1024)
        : target_(std::move(target)), capacity_(capacity == 0 ? 1 : capacity), socket_(io_)
    {
        resolve();
        worker_ = std::thread([this] { drain(); });
    }

    UdpSender(const UdpSender&) = delete;
    UdpSender& operator=(const UdpSender&) = delete;

    ~UdpSender() { stop(); }

    const Endpoint& target() const noexcept { return target_; }

    void enqueue(std::vector<std::uint8_t> datagram)
    {
        {
            std::lock_guard lock(mutex_);
            if (queue_.size() >= capacity_) {
                queue_.pop_front();
                ++dropped_;
            }
            queue_.push_back(std::move(datagram));
        }
        cv_.notify_one();
    }

    void send(const osc::Message& m) { enqueue(osc::encode(m)); }

    void send_frame(const std::vector<osc::Message>& messages)
    {
        if (!messages.empty())
            enqueue(osc::encode_frame(messages));
    }

    /// Waits until the queue is empty or the timeout passes.
    bool flush(std::chrono::milliseconds timeout = std::chrono::milliseconds(1000))
    {
        std::unique_lock lock(mutex_);
        return idle_cv_.wait_for(lock, timeout, [this] { return queue_.empty() && !in_flight_; });
    }

    SenderStats stats() const
    {
        std::lock_guard lock(mutex_);
        return {sent_, dropped_, errors_, queue_.size()};
    }

    void stop()
    {
        {
            std::lock_guard lock(mutex_);
            if (stopping_)
                return;
            stopping_ = true;
        }
        cv_.notify_all();
        if (worker_.joinable())
            worker_.join();
    }

private:
    void resolve()
    {
        boost::system::error_code ec;
        asio::ip::udp::resolver resolver(io_);
        auto results = resolver.resolve(target_.host, std::to_string(target_.port), ec);
        if (ec || results.empty()) {
            spdlog::warn("osc: cannot resolve {}: {}", target_.str(), ec.message());
            ++errors_;
            return;
        }
        destination_ = results.begin()->endpoint();
        socket_.open(destination_->protocol(), ec);
        if (ec) {
            spdlog::warn("osc: cannot open socket for {}: {}", target_.str(), ec.message());
            destination_.reset();
            ++errors_;
        }
    }

    void drain()
    {
        std::unique_lock lock(mutex_);
        for (;;) {
            cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (queue_.empty() && stopping_)
                return;
            std::vector<std::uint8_t> datagram = std::move(queue_.front());
            queue_.pop_front();
            in_flight_ = true;
            lock.unlock();

            bool ok = false;
            if (destination_) {
                boost::system::error_code ec;
                socket_.send_to(asio::buffer(datagram), *destination_, 0, ec);
                ok = !ec;
                if (ec)
                    spdlog::debug("osc: send to {} failed: {}", target_.str(), ec.message());
            }

            lock.lock();
            in_flight_ = false;
            if (ok)
                ++sent_;
            else
                ++errors_;
            if (queue_.empty())
                idle_cv_.notify_all();
        }
    }

    Endpoint target_;
    std::size_t capacity_;
    asio::io_context io_;
    asio::ip::udp::socket socket_;
    std::optional<asio::ip::udp::endpoint> destination_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<std::vector<std::uint8_t>> queue_;
    bool stopping_ = false;
    bool in_flight_ = false;
    std::uint64_t sent_ = 0;
    std::uint64_t dropped_ = 0;
    std::uint64_t errors_ = 0;
    std::thread worker_;
};

struct Datagram {
    std::vector<std::uint8_t> bytes;
    osc::Packet packet;
    std::chrono::steady_clock::time_point arrival;
};

/// Listens on a UDP port and hands decoded packets to one callback, in
/// arrival order, from a single background thread. Malformed datagrams are
/// counted and dropped.
class UdpReceiver {
public:
    using Callback = std::function<void(Datagram&&)>;

    /// Port 0 binds an ephemeral port; see port().
    UdpReceiver(std::uint16_t port, Callback cb, const std::string& bind_address = "127.0.0.1")
        : socket_(io_), callback_(std::move(cb)), buffer_(65536)
    {
        const auto address = asio::ip::make_address(bind_address);
        socket_.open(address.is_v6() ? asio::ip::udp::v6() : asio::ip::udp::v4());
        socket_.set_option(asio::socket_base::reuse_address(true));
        socket_.bind({address, port});
        port_ = socket_.local_endpoint().port();
        arm();
        worker_ = std::thread([this] { io_.run(); });
    }

    UdpReceiver(const UdpReceiver&) = delete;
    UdpReceiver& operator=(const UdpReceiver&) = delete;

    ~UdpReceiver() { stop(); }

    std::uint16_t port() const noexcept { return port_; }
    std::uint64_t received() const noexcept { return received_.load(); }
    std::uint64_t malformed() const noexcept { return malformed_.load(); }

    void stop()
    {
        io_.stop();
        if (worker_.joinable())
            worker_.join();
    }

private:
    void arm()
    {
        socket_.async_receive_from(asio::buffer(buffer_), sender_,
                                   [this](const boost::system::error_code& ec, std::size_t n) {
                                       if (ec == asio::error::operation_aborted)
                                           return;
                                       if (!ec)
                                           deliver(n);
                                       arm();
                                   });
    }

    void deliver(std::size_t n)
    {
        const auto arrival = std::chrono::steady_clock::now();
        std::vector<std::uint8_t> bytes(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(n));
        try {
            osc::Packet packet = osc::decode(bytes);
            ++received_;
            if (callback_)
                callback_(Datagram{std::move(bytes), std::move(packet), arrival});
        } catch (const osc::MalformedPacket&) {
            ++malformed_;
            spdlog::debug("osc: dropped malformed packet ({} bytes)", n);
        } catch (const std::exception& e) {
            spdlog::warn("osc: receive callback failed: {}", e.what());
        }
    }

    asio::io_context io_;
    asio::ip::udp::socket socket_;
    asio::ip::udp::endpoint sender_;
    Callback callback_;
    std::vector<std::uint8_t> buffer_;
    std::uint16_t port_ = 0;
    std::atomic<std::uint64_t> received_{0};
    std::atomic<std::uint64_t> malformed_{0};
    std::thread worker_;
};

} // namespace vivo
