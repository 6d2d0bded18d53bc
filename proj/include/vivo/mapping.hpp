#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <ctime>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vivo/error.hpp"

namespace vivo {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Scaler
// ---------------------------------------------------------------------------

/// Max-style `scale`: linear map of [in_min, in_max] onto [out_min, out_max]
/// with an exponent applied to the normalized input. Not clamped.
struct ScalerParams {
    double in_min = 0.0;
    double in_max = 1.0;
    double out_min = 0.0;
    double out_max = 1.0;
    double exponent = 1.0;

    friend bool operator==(const ScalerParams&, const ScalerParams&) = default;

    void validate() const
    {
        if (!std::isfinite(in_min) || !std::isfinite(in_max) || !std::isfinite(out_min) ||
            !std::isfinite(out_max) || !std::isfinite(exponent))
            throw Error("scaler parameters must be finite");
        if (in_min == in_max)
            throw Error("scaler in_min must differ from in_max");
        if (!(exponent > 0.0))
            throw Error("scaler exponent must be > 0");
    }
};

/// Inputs outside [in_min, in_max] overshoot; negative normalized inputs use
/// the signed power sgn(t)|t|^exponent. A degenerate input range (reachable
/// only mid-interpolation) yields out_min.
inline double scale(double x, const ScalerParams& p) noexcept
{
    if (p.in_max == p.in_min)
        return p.out_min;
    const double t = (x - p.in_min) / (p.in_max - p.in_min);
    const double shaped = p.exponent == 1.0 ? t : std::copysign(std::pow(std::fabs(t), p.exponent), t);
    return std::lerp(p.out_min, p.out_max, shaped);
}

// ---------------------------------------------------------------------------
// Router
// ---------------------------------------------------------------------------

/// Gains in [0,1]; rows are descriptor inputs, columns are target parameters.
class RoutingMatrix {
public:
    RoutingMatrix() = default;
    RoutingMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), gains_(rows * cols, fill)
    {
    }

    static RoutingMatrix identity(std::size_t n)
    {
        RoutingMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m.at(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& at(std::size_t i, std::size_t j) noexcept { return gains_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const noexcept { return gains_[i * cols_ + j]; }
    std::span<const double> gains() const noexcept { return gains_; }
    std::span<double> gains() noexcept { return gains_; }

    bool same_shape(const RoutingMatrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const RoutingMatrix&, const RoutingMatrix&) = default;

    void validate() const
    {
        for (double g : gains_) {
            if (!(g >= 0.0 && g <= 1.0))
                throw Error("routing gain outside [0,1]");
        }
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> gains_;
};

/// output_j = sum_i gains[i][j] * inputs[i]
inline std::vector<double> route(const RoutingMatrix& m, std::span<const double> inputs)
{
    if (inputs.size() != m.rows())
        throw Error("dimension mismatch");
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double x = inputs[i];
        for (std::size_t j = 0; j < m.cols(); ++j)
            out[j] += m.at(i, j) * x;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mapping state and presets
// ---------------------------------------------------------------------------

/// One routed source. `descriptor` names the analysis value; `address` is the
/// OSC address the value travels on (the proxy matches incoming messages on it).
struct MappingInput {
    std::string descriptor;
    std::string address;
    ScalerParams scaler;

    friend bool operator==(const MappingInput&, const MappingInput&) = default;
};

struct MappingOutput {
    std::string name;
    std::string address;

    friend bool operator==(const MappingOutput&, const MappingOutput&) = default;
};

inline void validate_osc_address(const std::string& address)
{
    if (address.empty() || address.front() != '/' || address.find('\0') != std::string::npos)
        throw Error("invalid OSC address: '" + address + "'");
}

/// The live control surface: per-input scalers, then the routing matrix.
struct MappingState {
    std::vector<MappingInput> inputs;
    std::vector<MappingOutput> outputs;
    RoutingMatrix matrix;
    bool expert_gains = false;

    friend bool operator==(const MappingState&, const MappingState&) = default;

    void validate() const
    {
        if (matrix.rows() != inputs.size() || matrix.cols() != outputs.size())
            throw Error("matrix dimensions do not match inputs x outputs");
        matrix.validate();
        for (const MappingInput& in : inputs) {
            if (in.descriptor.empty())
                throw Error("mapping input without descriptor");
            validate_osc_address(in.address);
            in.scaler.validate();
        }
        for (const MappingOutput& out : outputs) {
            if (out.name.empty())
                throw Error("mapping output without name");
            validate_osc_address(out.address);
        }
    }

    /// scale each input, then route.
    std::vector<double> apply(std::span<const double> raw) const
    {
        if (raw.size() != inputs.size())
            throw Error("dimension mismatch");
        std::vector<double> scaled(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i)
            scaled[i] = scale(raw[i], inputs[i].scaler);
        return route(matrix, scaled);
    }
};

struct Preset {
    std::string id;
    RoutingMatrix matrix;
    std::vector<ScalerParams> scalers;
    std::string created_at;

    friend bool operator==(const Preset&, const Preset&) = default;
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now())
{
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Preset make_preset(std::string id, const MappingState& state, std::string created_at = utc_timestamp())
{
    Preset p;
    p.id = std::move(id);
    p.matrix = state.matrix;
    p.scalers.reserve(state.inputs.size());
    for (const MappingInput& in : state.inputs)
        p.scalers.push_back(in.scaler);
    p.created_at = std::move(created_at);
    return p;
}

inline bool compatible(const MappingState& s, const Preset& p) noexcept
{
    return s.matrix.same_shape(p.matrix) && p.scalers.size() == s.inputs.size();
}

/// Interpolation progress of a ramp, clamped to [0,1]. A zero ramp is instant.
inline double ramp_progress(double elapsed_ms, double ramp_ms) noexcept
{
    if (!(ramp_ms > 0.0))
        return 1.0;
    return std::clamp(elapsed_ms / ramp_ms, 0.0, 1.0);
}

/// Linear interpolation of every numeric field from `current` towards
/// `target`. t = 0 returns current, t = 1 returns target's values exactly.
inline MappingState recall_preset(const MappingState& current, const Preset& target, double t)
{
    if (!compatible(current, target))
        throw Error("incompatible preset");
    t = std::clamp(t, 0.0, 1.0);
    auto mix = [t](double a, double b) { return (1.0 - t) * a + t * b; };

    MappingState out = current;
    auto dst = out.matrix.gains();
    const auto src = target.matrix.gains();
    for (std::size_t k = 0; k < dst.size(); ++k)
        dst[k] = mix(dst[k], src[k]);
    for (std::size_t i = 0; i < out.inputs.size(); ++i) {
        ScalerParams& s = out.inputs[i].scaler;
        const ScalerParams& g = target.scalers[i];
        s.in_min = mix(s.in_min, g.in_min);
        s.in_max = mix(s.in_max, g.in_max);
        s.out_min = mix(s.out_min, g.out_min);
        s.out_max = mix(s.out_max, g.out_max);
        s.exponent = mix(s.exponent, g.exponent);
    }
    return out;
}

inline MappingState recall_preset(const MappingState& current, const Preset& target, double ramp_ms,
                                  double elapsed_ms)
{
    return recall_preset(current, target, ramp_progress(elapsed_ms, ramp_ms));
}

/// Identity mapping over the given descriptors: unit scalers and an identity
/// matrix, outputs re-emitted under `prefix`/<descriptor>.
inline MappingState identity_mapping(const std::vector<std::string>& descriptors,
                                     const std::string& input_prefix = "/vivo",
                                     const std::string& output_prefix = "/mapped")
{
    MappingState s;
    for (const std::string& d : descriptors) {
        s.inputs.push_back({d, input_prefix + "/" + d, ScalerParams{}});
        s.outputs.push_back({d, output_prefix + "/" + d});
    }
    s.matrix = RoutingMatrix::identity(descriptors.size());
    return s;
}

// ---------------------------------------------------------------------------
// JSON schema (docs/mapping.schema.json)
// ---------------------------------------------------------------------------

inline void to_json(Json& j, const ScalerParams& p)
{
    j = Json{{"in_min", p.in_min}, {"in_max", p.in_max}, {"out_min", p.out_min},
             {"out_max", p.out_max}, {"exponent", p.exponent}};
}

inline void from_json(const Json& j, ScalerParams& p)
{
    p = ScalerParams{};
    p.in_min = j.value("in_min", p.in_min);
    p.in_max = j.value("in_max", p.in_max);
    p.out_min = j.value("out_min", p.out_min);
    p.out_max = j.value("out_max", p.out_max);
    p.exponent = j.value("exponent", p.exponent);
}

inline void to_json(Json& j, const RoutingMatrix& m)
{
    j = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (std::size_t k = 0; k < m.cols(); ++k)
            row.push_back(m.at(i, k));
        j.push_back(std::move(row));
    }
}

/// Rows are given explicitly; a matrix with zero rows takes `cols` columns.
inline RoutingMatrix matrix_from_json(const Json& j, std::size_t cols_if_empty)
{
    if (!j.is_array())
        throw Error("matrix must be an array of rows");
    if (j.empty())
        return RoutingMatrix(0, cols_if_empty);
    const std::size_t cols = j.front().size();
    RoutingMatrix m(j.size(), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw Error("matrix rows must have equal length");
        for (std::size_t k = 0; k < cols; ++k)
            m.at(i, k) = j[i][k].get<double>();
    }
    return m;
}

inline void to_json(Json& j, const MappingInput& in)
{
    j = Json{{"descriptor", in.descriptor}, {"address", in.address}, {"scaler", in.scaler}};
}

inline void from_json(const Json& j, MappingInput& in)
{
    in.descriptor = j.at("descriptor").get<std::string>();
    in.address = j.value("address", "/vivo/" + in.descriptor);
    in.scaler = j.contains("scaler") ? j.at("scaler").get<ScalerParams>() : ScalerParams{};
}

inline void to_json(Json& j, const MappingOutput& out)
{
    j = Json{{"name", out.name}, {"address", out.address}};
}

inline void from_json(const Json& j, MappingOutput& out)
{
    out.name = j.at("name").get<std::string>();
    out.address = j.at("address").get<std::string>();
}

inline void to_json(Json& j, const MappingState& s)
{
    j = Json{{"inputs", s.inputs}, {"outputs", s.outputs}, {"matrix", s.matrix},
             {"expert_gains", s.expert_gains}};
}

inline void from_json(const Json& j, MappingState& s)
{
    s.inputs = j.value("inputs", std::vector<MappingInput>{});
    s.outputs = j.value("outputs", std::vector<MappingOutput>{});
    s.matrix = matrix_from_json(j.value("matrix", Json::array()), s.outputs.size());
    s.expert_gains = j.value("expert_gains", false);
}

inline void to_json(Json& j, const Preset& p)
{
    j = Json{{"id", p.id}, {"matrix", p.matrix}, {"scalers", p.scalers}, {"created_at", p.created_at}};
}

inline void from_json(const Json& j, Preset& p)
{
    p.id = j.at("id").get<std::string>();
    p.scalers = j.value("scalers", std::vector<ScalerParams>{});
    p.matrix = matrix_from_json(j.value("matrix", Json::array()), 0);
    p.created_at = j.value("created_at", std::string{});
}

/// Parses and validates a mapping; any schema problem surfaces as vivo::Error.
inline MappingState parse_mapping(const Json& j)
{
    MappingState s;
    try {
        s = j.get<MappingState>();
    } catch (const Json::exception& e) {
        throw Error(std::string("malformed mapping: ") + e.what());
    }
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Snapshot store
// ---------------------------------------------------------------------------

class PresetNotFound : public Error {
public:
    explicit PresetNotFound(const std::string& id) : Error("unknown preset: " + id) {}
};

/// Shared mapping state. Writers replace the whole state; readers get an
/// immutable snapshot, interpolated on the fly while a preset ramp runs.
class MappingStore {
public:
    using Clock = std::chrono::steady_clock;

    explicit MappingStore(MappingState initial = {}, std::vector<Preset> presets = {})
        : current_(std::make_shared<const MappingState>(std::move(initial)))
    {
        current_->validate();
        for (Preset& p : presets)
            presets_[p.id] = std::move(p);
    }

    std::shared_ptr<const MappingState> snapshot(Clock::time_point now = Clock::now())
    {
        std::lock_guard lock(mutex_);
        if (!ramp_)
            return current_;
        const double elapsed = std::chrono::duration<double, std::milli>(now - ramp_->start).count();
        const double t = ramp_progress(elapsed, ramp_->ramp_ms);
        auto state = std::make_shared<const MappingState>(recall_preset(ramp_->from, ramp_->target, t));
        if (t >= 1.0) {
            current_ = state;
            ramp_.reset();
        }
        return state;
    }

    void replace(MappingState next)
    {
        next.validate();
        std::lock_guard lock(mutex_);
        ramp_.reset();
        current_ = std::make_shared<const MappingState>(std::move(next));
    }

    /// Starts a ramp from the current (possibly mid-ramp) state to a preset.
    void recall(const std::string& id, double ramp_ms, Clock::time_point now = Clock::now())
    {
        std::unique_lock lock(mutex_);
        auto it = presets_.find(id);
        if (it == presets_.end())
            throw PresetNotFound(id);
        const Preset target = it->second;
        lock.unlock();

        std::shared_ptr<const MappingState> from = snapshot(now);

        lock.lock();
        if (!compatible(*from, target))
            throw Error("incompatible preset");
        if (!(ramp_ms > 0.0)) {
            current_ = std::make_shared<const MappingState>(recall_preset(*from, target, 1.0));
            ramp_.reset();
            return;
        }
        ramp_ = Ramp{*from, target, now, ramp_ms};
    }

    Preset save_preset(const std::string& id, Clock::time_point now = Clock::now())
    {
        if (id.empty())
            throw Error("preset id must not be empty");
        Preset p = make_preset(id, *snapshot(now));
        std::lock_guard lock(mutex_);
        presets_[id] = p;
        return p;
    }

    void put_preset(Preset p)
    {
        if (p.id.empty())
            throw Error("preset id must not be empty");
        for (const ScalerParams& s : p.scalers)
            s.validate();
        p.matrix.validate();
        std::lock_guard lock(mutex_);
        presets_[p.id] = std::move(p);
    }

    std::vector<Preset> presets() const
    {
        std::lock_guard lock(mutex_);
        std::vector<Preset> out;
        out.reserve(presets_.size());
        for (const auto& [id, p] : presets_)
            out.push_back(p);
        return out;
    }

    std::optional<Preset> preset(const std::string& id) const
    {
        std::lock_guard lock(mutex_);
        auto it = presets_.find(id);
        if (it == presets_.end())
            return std::nullopt;
        return it->second;
    }

    bool ramping() const
    {
        std::lock_guard lock(mutex_);
        return ramp_.has_value();
    }

private:
    struct Ramp {
        MappingState from;
        Preset target;
        Clock::time_point start;
        double ramp_ms;
    };

    mutable std::mutex mutex_;
    std::shared_ptr<const MappingState> current_;
    std::optional<Ramp> ramp_;
    std::map<std::string, Preset> presets_;
};

} // namespace vivo
