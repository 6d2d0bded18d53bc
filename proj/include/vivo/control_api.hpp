#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include <poll.h>
#include <sys/socket.h>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "vivo/descriptors.hpp"
#include "vivo/error.hpp"
#include "vivo/mapping.hpp"
#include "vivo/osc_transport.hpp"

namespace vivo {

namespace beast = boost::beast;
namespace http = boost::beast::http;
namespace websocket = boost::beast::websocket;

using HttpRequest = http::request<http::string_body>;
using HttpResponse = http::response<http::string_body>;

/// Engine-side data the API exposes but does not own.
struct ControlHooks {
    std::function<Json()> latest_frame;  // null when nothing analysed yet
    std::function<Json()> metrics;
    std::function<void()> changed;  // after a mapping or preset edit
};

namespace internal {

inline std::string percent_decode(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] == '%' && k + 2 < s.size()) {
            const auto hex = [](char c) -> int {
                if (c >= '0' && c <= '9') return c - '0';
                if (c >= 'a' && c <= 'f') return c - 'a' + 10;
                if (c >= 'A' && c <= 'F') return c - 'A' + 10;
                return -1;
            };
            const int hi = hex(s[k + 1]), lo = hex(s[k + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                k += 2;
                continue;
            }
        }
        out.push_back(s[k] == '+' ? ' ' : s[k]);
    }
    return out;
}

inline std::optional<std::string> query_param(std::string_view query, std::string_view key)
{
    while (!query.empty()) {
        const std::size_t amp = std::min(query.find('&'), query.size());
        const std::string_view pair = query.substr(0, amp);
        const std::size_t eq = std::min(pair.find('='), pair.size());
        if (pair.substr(0, eq) == key)
            return percent_decode(pair.substr(std::min(eq + 1, pair.size())));
        query.remove_prefix(std::min(amp + 1, query.size()));
    }
    return std::nullopt;
}

inline HttpResponse json_response(const HttpRequest& req, http::status status, std::string body)
{
    HttpResponse res{status, req.version()};
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
}

inline HttpResponse error_response(const HttpRequest& req, http::status status, const std::string& message)
{
    return json_response(req, status, Json{{"error", message}}.dump());
}

inline void check_descriptors(const MappingState& s)
{
    for (const MappingInput& in : s.inputs) {
        if (!is_descriptor(in.descriptor))
            throw Error("unknown descriptor: " + in.descriptor);
    }
}

inline Json parse_body(const HttpRequest& req)
{
    try {
        return Json::parse(req.body());
    } catch (const Json::exception& e) {
        throw Error(std::string("invalid JSON: ") + e.what());
    }
}

} // namespace internal

/// Routes one request against the mapping store. Independent of sockets.
inline HttpResponse handle_request(const HttpRequest& req, MappingStore& store, const ControlHooks& hooks = {})
{
    using internal::error_response;
    using internal::json_response;

    const std::string_view target(req.target().data(), req.target().size());
    const auto qmark = target.find('?');
    const std::string_view path = target.substr(0, qmark);
    const std::string_view query = qmark == std::string_view::npos ? std::string_view{} : target.substr(qmark + 1);
    const auto method = req.method();

    if (method == http::verb::options) {
        HttpResponse res{http::status::no_content, req.version()};
        res.set(http::field::access_control_allow_origin, "*");
        res.set(http::field::access_control_allow_methods, "GET, PUT, POST, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
        res.keep_alive(req.keep_alive());
        res.prepare_payload();
        return res;
    }

    try {
        if (path == "/api/mapping") {
            if (method == http::verb::get)
                return json_response(req, http::status::ok, Json(*store.snapshot()).dump());
            if (method == http::verb::put) {
                MappingState next = parse_mapping(internal::parse_body(req));
                internal::check_descriptors(next);
                store.replace(next);
                if (hooks.changed)
                    hooks.changed();
                return json_response(req, http::status::ok, Json(*store.snapshot()).dump());
            }
            return error_response(req, http::status::method_not_allowed, "method not allowed");
        }

        if (path == "/api/presets") {
            if (method == http::verb::get)
                return json_response(req, http::status::ok, Json(store.presets()).dump());
            if (method == http::verb::post) {
                const Json body = internal::parse_body(req);
                if (!body.is_object() || !body.contains("id") || !body["id"].is_string())
                    throw Error("preset body needs a string id");
                Preset p;
                if (body.contains("matrix")) {
                    try {
                        p = body.get<Preset>();
                    } catch (const Json::exception& e) {
                        throw Error(std::string("malformed preset: ") + e.what());
                    }
                    if (p.created_at.empty())
                        p.created_at = utc_timestamp();
                    store.put_preset(p);
                } else {
                    p = store.save_preset(body["id"].get<std::string>());
                }
                if (hooks.changed)
                    hooks.changed();
                return json_response(req, http::status::created, Json(p).dump());
            }
            return error_response(req, http::status::method_not_allowed, "method not allowed");
        }

        constexpr std::string_view prefix = "/api/presets/";
        constexpr std::string_view suffix = "/recall";
        if (path.starts_with(prefix) && path.ends_with(suffix) && path.size() > prefix.size() + suffix.size()) {
            if (method != http::verb::post)
                return error_response(req, http::status::method_not_allowed, "method not allowed");
            const std::string id =
                internal::percent_decode(path.substr(prefix.size(), path.size() - prefix.size() - suffix.size()));
            double ramp_ms = 0.0;
            if (const auto r = internal::query_param(query, "ramp_ms")) {
                try {
                    std::size_t used = 0;
                    ramp_ms = std::stod(*r, &used);
                    if (used != r->size())
                        throw Error("");
                } catch (const std::exception&) {
                    throw Error("invalid ramp_ms");
                }
                if (!(ramp_ms >= 0.0))
                    throw Error("ramp_ms must be non-negative");
            }
            try {
                store.recall(id, ramp_ms);
            } catch (const PresetNotFound& e) {
                return error_response(req, http::status::not_found, e.what());
            } catch (const Error& e) {
                return error_response(req, http::status::conflict, e.what());
            }
            if (hooks.changed)
                hooks.changed();
            return json_response(req, http::status::ok, Json{{"recalled", id}, {"ramp_ms", ramp_ms}}.dump());
        }

        if (path == "/api/metrics" && method == http::verb::get)
            return json_response(req, http::status::ok, hooks.metrics ? hooks.metrics().dump() : "{}");
        if (path == "/api/descriptors" && method == http::verb::get)
            return json_response(req, http::status::ok, hooks.latest_frame ? hooks.latest_frame().dump() : "null");
    } catch (const Error& e) {
        return error_response(req, http::status::bad_request, e.what());
    } catch (const Json::exception& e) {
        return error_response(req, http::status::bad_request, e.what());
    }
    return error_response(req, http::status::not_found, "not found");
}

/// Monitor payload: the latest descriptor frame plus the live (possibly
/// ramping) routing gains and scalers.
inline Json monitor_payload(MappingStore& store, const ControlHooks& hooks)
{
    const auto state = store.snapshot();
    Json scalers = Json::array();
    for (const MappingInput& in : state->inputs)
        scalers.push_back(in.scaler);
    return Json{{"descriptors", hooks.latest_frame ? hooks.latest_frame() : Json(nullptr)},
                {"mapping", {{"matrix", state->matrix}, {"scalers", scalers}, {"ramping", store.ramping()}}}};
}

/// HTTP + WebSocket control server. Each connection runs on its own thread;
/// stop() shuts every socket down and joins them.
class ControlServer {
public:
    ControlServer(const Endpoint& bind, MappingStore& store, ControlHooks hooks, double monitor_hz = 20.0)
        : store_(store), hooks_(std::move(hooks)),
          period_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
              std::chrono::duration<double>(1.0 / monitor_hz))),
          acceptor_(io_)
    {
        using asio::ip::tcp;
        const auto address = asio::ip::make_address(bind.host == "localhost" ? "127.0.0.1" : bind.host);
        const tcp::endpoint ep{address, bind.port};
        acceptor_.open(ep.protocol());
        acceptor_.set_option(asio::socket_base::reuse_address(true));
        acceptor_.bind(ep);
        acceptor_.listen();
        port_ = acceptor_.local_endpoint().port();
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    ControlServer(const ControlServer&) = delete;
    ControlServer& operator=(const ControlServer&) = delete;

    ~ControlServer() { stop(); }

    std::uint16_t port() const noexcept { return port_; }

    void stop()
    {
        {
            std::lock_guard lock(mutex_);
            if (stopping_)
                return;
            stopping_ = true;
            for (Session& s : sessions_)
                ::shutdown(s.fd, SHUT_RDWR);
        }
        wake_.notify_all();
        ::shutdown(acceptor_.native_handle(), SHUT_RDWR);
        if (accept_thread_.joinable())
            accept_thread_.join();
        std::list<Session> sessions;
        {
            std::lock_guard lock(mutex_);
            sessions.swap(sessions_);
        }
        for (Session& s : sessions) {
            if (s.thread.joinable())
                s.thread.join();
        }
        boost::system::error_code ec;
        acceptor_.close(ec);
    }

private:
    struct Session {
        int fd = -1;
        std::shared_ptr<std::atomic<bool>> done;
        std::thread thread;
    };

    void accept_loop()
    {
        for (;;) {
            boost::system::error_code ec;
            asio::ip::tcp::socket socket(io_);
            acceptor_.accept(socket, ec);
            std::lock_guard lock(mutex_);
            if (stopping_)
                return;
            if (ec) {
                spdlog::debug("api: accept failed: {}", ec.message());
                continue;
            }
            reap();
            auto done = std::make_shared<std::atomic<bool>>(false);
            const int fd = socket.native_handle();
            sessions_.push_back(Session{fd, done, std::thread([this, s = std::move(socket), done]() mutable {
                                            serve(std::move(s));
                                            done->store(true);
                                        })});
        }
    }

    void reap()
    {
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if (it->done->load()) {
                it->thread.join();
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
    }

    bool stopping() const
    {
        std::lock_guard lock(mutex_);
        return stopping_;
    }

    void serve(asio::ip::tcp::socket socket)
    {
        beast::flat_buffer buffer;
        for (;;) {
            HttpRequest req;
            boost::system::error_code ec;
            http::read(socket, buffer, req, ec);
            if (ec)
                return;
            const std::string_view target(req.target().data(), req.target().size());
            if (websocket::is_upgrade(req) && target.substr(0, target.find('?')) == "/api/monitor") {
                monitor(std::move(socket), req);
                return;
            }
            HttpResponse res = handle_request(req, store_, hooks_);
            spdlog::debug("api: {} {} -> {}", std::string(req.method_string()), std::string(target),
                          res.result_int());
            http::write(socket, res, ec);
            if (ec || !res.keep_alive())
                break;
        }
        boost::system::error_code ignored;
        socket.shutdown(asio::ip::tcp::socket::shutdown_send, ignored);
    }

    void monitor(asio::ip::tcp::socket socket, const HttpRequest& req)
    {
        websocket::stream<asio::ip::tcp::socket> ws(std::move(socket));
        boost::system::error_code ec;
        ws.accept(req, ec);
        if (ec)
            return;
        ws.text(true);
        const int fd = ws.next_layer().native_handle();
        auto next = std::chrono::steady_clock::now();
        while (!stopping()) {
            const std::string payload = monitor_payload(store_, hooks_).dump();
            ws.write(asio::buffer(payload), ec);
            if (ec)
                return;
            next += period_;
            // Idle until the next push, but keep reading so a client close
            // (or anything else it sends) is answered.
            for (;;) {
                const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                    next - std::chrono::steady_clock::now());
                if (left.count() <= 0 || stopping())
                    break;
                pollfd pfd{fd, POLLIN, 0};
                if (::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 100))) <= 0)
                    continue;
                beast::flat_buffer incoming;
                ws.read(incoming, ec);
                if (ec)
                    return;
            }
        }
        ws.close(websocket::close_code::going_away, ec);
    }

    MappingStore& store_;
    ControlHooks hooks_;
    std::chrono::steady_clock::duration period_;
    asio::io_context io_;
    asio::ip::tcp::acceptor acceptor_;
    std::uint16_t port_ = 0;

    mutable std::mutex mutex_;
    std::condition_variable wake_;
    bool stopping_ = false;
    std::list<Session> sessions_;
    std::thread accept_thread_;
};

} // namespace vivo
