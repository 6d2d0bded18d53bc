#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "vivo/mapping.hpp"
#include "vivo/osc.hpp"
#include "vivo/osc_transport.hpp"

namespace vivo {

/// Re-maps incoming descriptor messages. A message whose address matches a
/// mapping input updates that input's latest value; the outputs it routes
/// to are recomputed and emitted. Other messages pass through unchanged.
class MappingProxy {
public:
    explicit MappingProxy(MappingStore& store) : store_(store) {}

    std::vector<osc::Message> handle(const osc::Message& in)
    {
        const auto state = store_.snapshot();
        std::lock_guard lock(mutex_);
        if (latest_.size() != state->inputs.size())
            latest_.assign(state->inputs.size(), 0.0);

        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < state->inputs.size(); ++i) {
            if (state->inputs[i].address == in.address)
                rows.push_back(i);
        }
        const auto value = osc::first_number(in);
        if (rows.empty() || !value) {
            ++forwarded_;
            return {in};
        }
        for (std::size_t i : rows)
            latest_[i] = *value;

        const std::vector<double> out = state->apply(latest_);
        std::vector<osc::Message> emitted;
        for (std::size_t j = 0; j < state->outputs.size(); ++j) {
            bool routed = false;
            for (std::size_t i : rows)
                routed = routed || state->matrix.at(i, j) != 0.0;
            if (routed)
                emitted.push_back({state->outputs[j].address, {static_cast<float>(out[j])}});
        }
        ++mapped_;
        return emitted;
    }

    std::uint64_t mapped() const
    {
        std::lock_guard lock(mutex_);
        return mapped_;
    }

    std::uint64_t forwarded() const
    {
        std::lock_guard lock(mutex_);
        return forwarded_;
    }

private:
    MappingStore& store_;
    mutable std::mutex mutex_;
    std::vector<double> latest_;
    std::uint64_t mapped_ = 0;
    std::uint64_t forwarded_ = 0;
};

struct ProxyStats {
    std::uint64_t received = 0;
    std::uint64_t malformed = 0;
    std::uint64_t mapped = 0;
    std::uint64_t forwarded = 0;
    SenderStats sender;
};

/// Listens on `listen_port`, re-maps every message and sends the result to
/// `target` (one datagram per incoming packet).
class ProxyService {
public:
    ProxyService(std::uint16_t listen_port, const Endpoint& target, MappingStore& store,
                 std::size_t queue_capacity = 1024, const std::string& bind_address = "127.0.0.1")
        : proxy_(store), sender_(target, queue_capacity),
          receiver_(listen_port, [this](Datagram&& d) { forward(std::move(d)); }, bind_address)
    {
    }

    std::uint16_t port() const noexcept { return receiver_.port(); }

    ProxyStats stats() const
    {
        return {receiver_.received(), receiver_.malformed(), proxy_.mapped(), proxy_.forwarded(), sender_.stats()};
    }

    void stop()
    {
        receiver_.stop();
        sender_.flush();
        sender_.stop();
    }

private:
    void forward(Datagram&& d)
    {
        std::vector<osc::Message> out;
        for (const osc::Message& m : osc::messages_of(std::move(d.packet))) {
            std::vector<osc::Message> mapped = proxy_.handle(m);
            out.insert(out.end(), std::make_move_iterator(mapped.begin()), std::make_move_iterator(mapped.end()));
        }
        sender_.send_frame(out);
    }

    MappingProxy proxy_;
    UdpSender sender_;
    UdpReceiver receiver_;
};

} // namespace vivo
