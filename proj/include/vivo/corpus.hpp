#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "vivo/descriptors.hpp"
#include "vivo/error.hpp"
#include "vivo/image.hpp"

namespace vivo {

struct TableRow {
    std::int64_t unit_index = 0;
    double time_ms = 0.0;
    std::vector<double> values;

    friend bool operator==(const TableRow&, const TableRow&) = default;
};

/// Per-unit descriptor rows for a whole video (or an imported audio corpus).
/// Immutable once built; column min/max are kept for normalization.
class DescriptorTable {
public:
    DescriptorTable() = default;

    DescriptorTable(std::vector<std::string> columns, std::vector<TableRow> rows)
        : columns_(std::move(columns)), rows_(std::move(rows))
    {
        const std::size_t n = columns_.size();
        mins_.assign(n, std::numeric_limits<double>::infinity());
        maxs_.assign(n, -std::numeric_limits<double>::infinity());
        for (const TableRow& r : rows_) {
            if (r.values.size() != n)
                throw Error("row arity does not match columns");
            for (std::size_t c = 0; c < n; ++c) {
                mins_[c] = std::min(mins_[c], r.values[c]);
                maxs_[c] = std::max(maxs_[c], r.values[c]);
            }
        }
        if (rows_.empty()) {
            mins_.assign(n, 0.0);
            maxs_.assign(n, 0.0);
        }
    }

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<TableRow>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    double min(std::size_t c) const noexcept { return mins_[c]; }
    double max(std::size_t c) const noexcept { return maxs_[c]; }

    std::optional<std::size_t> column_index(std::string_view name) const noexcept
    {
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            if (columns_[c] == name)
                return c;
        }
        return std::nullopt;
    }

    /// Row position of a unit index.
    const TableRow& unit(std::int64_t unit_index) const
    {
        for (const TableRow& r : rows_) {
            if (r.unit_index == unit_index)
                return r;
        }
        throw Error("unknown unit");
    }

    friend bool operator==(const DescriptorTable& a, const DescriptorTable& b)
    {
        return a.columns_ == b.columns_ && a.rows_ == b.rows_;
    }

private:
    std::vector<std::string> columns_;
    std::vector<TableRow> rows_;
    std::vector<double> mins_;
    std::vector<double> maxs_;
};

/// Target position on a subset of table dimensions.
struct Query {
    std::vector<std::string> dims;
    std::vector<double> values;
};

enum class PairingMode { pre_selection, post_selection };

inline const std::vector<std::string>& corpus_columns()
{
    static const std::vector<std::string> cols{"warmth", "sharpness", "detail", "luminance", "motion_global"};
    return cols;
}

// ---------------------------------------------------------------------------
// Offline analysis
// ---------------------------------------------------------------------------

/// Pulls frames until the source returns nullopt; one row per frame. The
/// first frame (and any frame after a size change) has motion 0.
inline DescriptorTable analyze_video(const std::function<std::optional<Frame>()>& next_frame,
                                     const AnalysisConfig& cfg = {})
{
    cfg.validate();
    std::vector<TableRow> rows;
    std::optional<Frame> prev;
    std::int64_t index = 0;
    while (std::optional<Frame> f = next_frame()) {
        const Frame* p = (prev && prev->same_shape(*f)) ? &*prev : nullptr;
        const DescriptorFrame d = analyze_frame(*f, p, cfg);
        std::vector<double> values;
        values.reserve(corpus_columns().size());
        for (const std::string& c : corpus_columns())
            values.push_back(descriptor_value(d, c));
        rows.push_back({index++, f->timestamp_ms(), std::move(values)});
        prev = std::move(f);
    }
    if (rows.empty())
        throw Error("empty corpus");
    return DescriptorTable(corpus_columns(), std::move(rows));
}

inline DescriptorTable analyze_video(std::span<const Frame> frames, const AnalysisConfig& cfg = {})
{
    std::size_t k = 0;
    return analyze_video(
        [&]() -> std::optional<Frame> {
            if (k == frames.size())
                return std::nullopt;
            return frames[k++];
        },
        cfg);
}

// ---------------------------------------------------------------------------
// Unit selection
// ---------------------------------------------------------------------------

namespace internal {

struct ResolvedQuery {
    std::vector<std::size_t> cols;
    std::vector<double> values;
};

inline ResolvedQuery resolve(const DescriptorTable& t, const Query& q)
{
    if (q.dims.size() != q.values.size())
        throw Error("query dims and values differ in length");
    ResolvedQuery r;
    for (std::size_t k = 0; k < q.dims.size(); ++k) {
        const auto c = t.column_index(q.dims[k]);
        if (!c)
            throw Error("unknown descriptor");
        r.cols.push_back(*c);
        r.values.push_back(q.values[k]);
    }
    return r;
}

inline double normalized(const DescriptorTable& t, std::size_t c, double x) noexcept
{
    const double range = t.max(c) - t.min(c);
    return range > 0.0 ? (x - t.min(c)) / range : 0.0;
}

} // namespace internal

/// Unit index closest to the query: Euclidean distance over the queried
/// dimensions, each min-max normalized by the table. Zero-range columns
/// contribute nothing. Ties go to the lowest unit index.
inline std::int64_t nearest(const DescriptorTable& t, const Query& q)
{
    if (t.empty())
        throw Error("empty corpus");
    const internal::ResolvedQuery rq = internal::resolve(t, q);

    std::vector<double> target(rq.cols.size());
    for (std::size_t k = 0; k < rq.cols.size(); ++k)
        target[k] = internal::normalized(t, rq.cols[k], rq.values[k]);

    double best = std::numeric_limits<double>::infinity();
    std::int64_t best_index = 0;
    bool found = false;
    for (const TableRow& row : t.rows()) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < rq.cols.size(); ++k) {
            const double diff = internal::normalized(t, rq.cols[k], row.values[rq.cols[k]]) - target[k];
            d2 += diff * diff;
        }
        if (!found || d2 < best || (d2 == best && row.unit_index < best_index)) {
            best = d2;
            best_index = row.unit_index;
            found = true;
        }
    }
    return best_index;
}

/// Columns present in both tables, in a's order.
inline std::vector<std::string> shared_dims(const DescriptorTable& a, const DescriptorTable& b)
{
    std::vector<std::string> out;
    for (const std::string& c : a.columns()) {
        if (b.column_index(c))
            out.push_back(c);
    }
    return out;
}

struct Pairing {
    std::int64_t unit_a = 0;
    std::int64_t unit_b = 0;

    friend bool operator==(const Pairing&, const Pairing&) = default;
};

/// Pre-selection queries both corpora with the cursor. Post-selection picks
/// in `a`, then queries `b` with that unit's values on the shared columns.
inline Pairing pair(const DescriptorTable& a, const DescriptorTable& b, const Query& cursor, PairingMode mode)
{
    Pairing p;
    p.unit_a = nearest(a, cursor);
    if (mode == PairingMode::pre_selection) {
        p.unit_b = nearest(b, cursor);
        return p;
    }
    Query follow;
    follow.dims = shared_dims(a, b);
    if (follow.dims.empty())
        throw Error("no shared descriptors");
    const TableRow& picked = a.unit(p.unit_a);
    for (const std::string& d : follow.dims)
        follow.values.push_back(picked.values[*a.column_index(d)]);
    p.unit_b = nearest(b, follow);
    return p;
}

inline PairingMode parse_pairing_mode(std::string_view s)
{
    if (s == "pre" || s == "pre_selection")
        return PairingMode::pre_selection;
    if (s == "post" || s == "post_selection")
        return PairingMode::post_selection;
    throw Error("unknown pairing mode: " + std::string(s));
}

// ---------------------------------------------------------------------------
// CSV: "unit_index,time_ms,<descriptor names...>", shortest round-trip doubles
// ---------------------------------------------------------------------------

namespace internal {

inline void put_double(std::ostream& os, double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, res.ptr - buf);
}

inline double parse_double(std::string_view s)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Error("invalid number in CSV: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            return out;
        start = comma + 1;
    }
}

} // namespace internal

inline void write_csv(std::ostream& os, const DescriptorTable& t)
{
    os << "unit_index,time_ms";
    for (const std::string& c : t.columns())
        os << ',' << c;
    os << '\n';
    for (const TableRow& r : t.rows()) {
        os << r.unit_index << ',';
        internal::put_double(os, r.time_ms);
        for (double v : r.values) {
            os << ',';
            internal::put_double(os, v);
        }
        os << '\n';
    }
}

inline DescriptorTable read_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw Error("empty CSV");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    const auto header = internal::split_csv(line);
    if (header.size() < 2 || header[0] != "unit_index" || header[1] != "time_ms")
        throw Error("CSV header must start with unit_index,time_ms");
    std::vector<std::string> columns(header.begin() + 2, header.end());

    std::vector<TableRow> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto fields = internal::split_csv(line);
        if (fields.size() != header.size())
            throw Error("CSV row arity does not match header");
        TableRow r;
        const auto idx = fields[0];
        const auto res = std::from_chars(idx.data(), idx.data() + idx.size(), r.unit_index);
        if (res.ec != std::errc{} || res.ptr != idx.data() + idx.size())
            throw Error("invalid unit_index in CSV: '" + std::string(idx) + "'");
        r.time_ms = internal::parse_double(fields[1]);
        for (std::size_t k = 2; k < fields.size(); ++k)
            r.values.push_back(internal::parse_double(fields[k]));
        rows.push_back(std::move(r));
    }
    return DescriptorTable(std::move(columns), std::move(rows));
}

inline void save_csv(const std::string& path, const DescriptorTable& t)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot write " + path);
    write_csv(os, t);
    if (!os)
        throw Error("write failed: " + path);
}

inline DescriptorTable load_csv(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error("cannot read " + path);
    return read_csv(is);
}

} // namespace vivo
