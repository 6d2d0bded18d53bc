#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vivo/error.hpp"

// OSC 1.0 wire format: big-endian, every field padded to 4 bytes.
// Supported argument types: f (float32), i (int32), s (string).

namespace vivo::osc {

using Value = std::variant<float, std::int32_t, std::string>;

struct Message {
    std::string address;
    std::vector<Value> args;

    Message() = default;
    Message(std::string addr, std::vector<Value> a = {}) : address(std::move(addr)), args(std::move(a)) {}

    /// Bitwise equality; float NaNs with equal payloads compare equal.
    friend bool operator==(const Message& a, const Message& b)
    {
        if (a.address != b.address || a.args.size() != b.args.size())
            return false;
        for (std::size_t i = 0; i < a.args.size(); ++i) {
            const Value& x = a.args[i];
            const Value& y = b.args[i];
            if (x.index() != y.index())
                return false;
            if (const float* fx = std::get_if<float>(&x)) {
                if (std::bit_cast<std::uint32_t>(*fx) != std::bit_cast<std::uint32_t>(std::get<float>(y)))
                    return false;
            } else if (x != y) {
                return false;
            }
        }
        return true;
    }
};

/// "Execute immediately" time tag.
inline constexpr std::uint64_t immediate = 1;

struct Bundle {
    std::uint64_t timetag = immediate;
    std::vector<Message> messages;
};

using Packet = std::variant<Message, Bundle>;

class MalformedPacket : public Error {
public:
    MalformedPacket() : Error("malformed packet") {}
};

namespace internal {

inline std::size_t padded(std::size_t n) noexcept { return (n + 3) & ~std::size_t{3}; }

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

/// String plus at least one NUL, zero-padded to a multiple of 4.
inline void put_string(std::vector<std::uint8_t>& out, std::string_view s)
{
    out.insert(out.end(), s.begin(), s.end());
    const std::size_t total = padded(s.size() + 1);
    out.insert(out.end(), total - s.size(), std::uint8_t{0});
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

    bool done() const noexcept { return pos_ == bytes_.size(); }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    std::uint32_t u32()
    {
        if (remaining() < 4)
            throw MalformedPacket();
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += 4;
        return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
               std::uint32_t{p[3]};
    }

    std::string string()
    {
        const std::uint8_t* begin = bytes_.data() + pos_;
        const void* nul = std::memchr(begin, 0, remaining());
        if (nul == nullptr)
            throw MalformedPacket();
        const std::size_t len = static_cast<std::size_t>(static_cast<const std::uint8_t*>(nul) - begin);
        const std::size_t total = padded(len + 1);
        if (total > remaining())
            throw MalformedPacket();
        for (std::size_t k = len; k < total; ++k) {
            if (begin[k] != 0)
                throw MalformedPacket();
        }
        std::string s(reinterpret_cast<const char*>(begin), len);
        pos_ += total;
        return s;
    }

    std::span<const std::uint8_t> take(std::size_t n)
    {
        if (n > remaining())
            throw MalformedPacket();
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

inline void check_address(const std::string& address)
{
    if (address.empty() || address.front() != '/' || address.find('\0') != std::string::npos)
        throw Error("invalid OSC address");
}

} // namespace internal

inline char type_tag(const Value& v) noexcept
{
    switch (v.index()) {
    case 0: return 'f';
    case 1: return 'i';
    default: return 's';
    }
}

inline void encode_into(std::vector<std::uint8_t>& out, const Message& m)
{
    internal::check_address(m.address);
    internal::put_string(out, m.address);

    std::string tags = ",";
    for (const Value& v : m.args)
        tags.push_back(type_tag(v));
    internal::put_string(out, tags);

    for (const Value& v : m.args) {
        if (const float* f = std::get_if<float>(&v)) {
            internal::put_u32(out, std::bit_cast<std::uint32_t>(*f));
        } else if (const std::int32_t* i = std::get_if<std::int32_t>(&v)) {
            internal::put_u32(out, static_cast<std::uint32_t>(*i));
        } else {
            const std::string& s = std::get<std::string>(v);
            if (s.find('\0') != std::string::npos)
                throw Error("unsupported type tag");
            internal::put_string(out, s);
        }
    }
}

inline std::vector<std::uint8_t> encode(const Message& m)
{
    std::vector<std::uint8_t> out;
    out.reserve(64);
    encode_into(out, m);
    return out;
}

inline std::vector<std::uint8_t> encode(const Bundle& b)
{
    std::vector<std::uint8_t> out;
    internal::put_string(out, "#bundle");
    internal::put_u32(out, static_cast<std::uint32_t>(b.timetag >> 32));
    internal::put_u32(out, static_cast<std::uint32_t>(b.timetag));
    for (const Message& m : b.messages) {
        const std::vector<std::uint8_t> element = encode(m);
        internal::put_u32(out, static_cast<std::uint32_t>(element.size()));
        out.insert(out.end(), element.begin(), element.end());
    }
    return out;
}

/// One datagram for a frame's messages: the bare message when there is only
/// one, a bundle otherwise.
inline std::vector<std::uint8_t> encode_frame(const std::vector<Message>& messages)
{
    if (messages.size() == 1)
        return encode(messages.front());
    return encode(Bundle{immediate, messages});
}

inline Message decode_message(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4 || bytes.size() % 4 != 0)
        throw MalformedPacket();
    internal::Reader r(bytes);
    Message m;
    m.address = r.string();
    if (m.address.empty() || m.address.front() != '/')
        throw MalformedPacket();

    // A message without a type tag string is tolerated as argument-less.
    if (r.done())
        return m;
    const std::string tags = r.string();
    if (tags.empty() || tags.front() != ',')
        throw MalformedPacket();

    for (std::size_t k = 1; k < tags.size(); ++k) {
        switch (tags[k]) {
        case 'f': m.args.emplace_back(std::bit_cast<float>(r.u32())); break;
        case 'i': m.args.emplace_back(static_cast<std::int32_t>(r.u32())); break;
        case 's': m.args.emplace_back(r.string()); break;
        default: throw MalformedPacket();
        }
    }
    if (!r.done())
        throw MalformedPacket();
    return m;
}

namespace internal {

inline void decode_bundle_into(std::span<const std::uint8_t> bytes, Bundle& out, int depth)
{
    if (depth > 8)
        throw MalformedPacket();
    Reader r(bytes);
    if (r.string() != "#bundle")
        throw MalformedPacket();
    const std::uint64_t hi = r.u32();
    const std::uint64_t lo = r.u32();
    if (depth == 0)
        out.timetag = (hi << 32) | lo;
    while (!r.done()) {
        const std::uint32_t size = r.u32();
        if (size % 4 != 0)
            throw MalformedPacket();
        const auto element = r.take(size);
        if (!element.empty() && element[0] == '#')
            decode_bundle_into(element, out, depth + 1);
        else
            out.messages.push_back(decode_message(element));
    }
}

} // namespace internal

/// Decodes a datagram. Nested bundles are flattened into the outer one.
inline Packet decode(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4 || bytes.size() % 4 != 0)
        throw MalformedPacket();
    if (bytes[0] == '#') {
        Bundle b;
        internal::decode_bundle_into(bytes, b, 0);
        return b;
    }
    return decode_message(bytes);
}

/// All messages carried by a packet, in order.
inline std::vector<Message> messages_of(Packet p)
{
    if (auto* m = std::get_if<Message>(&p))
        return {std::move(*m)};
    return std::move(std::get<Bundle>(p).messages);
}

/// Numeric value of the first argument, if any.
inline std::optional<double> first_number(const Message& m)
{
    if (m.args.empty())
        return std::nullopt;
    if (const float* f = std::get_if<float>(&m.args.front()))
        return *f;
    if (const std::int32_t* i = std::get_if<std::int32_t>(&m.args.front()))
        return *i;
    return std::nullopt;
}

} // namespace vivo::osc
