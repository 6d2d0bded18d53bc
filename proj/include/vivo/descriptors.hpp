#pragma once

#include <future>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vivo/detail.hpp"
#include "vivo/error.hpp"
#include "vivo/image.hpp"
#include "vivo/motion.hpp"
#include "vivo/sharpness.hpp"
#include "vivo/warmness.hpp"

namespace vivo {

struct AnalysisToggles {
    bool warmth = true;
    bool sharpness = true;
    bool detail = true;
    bool luminance = true;
    bool motion = true;
};

struct AnalysisConfig {
    QuantizationParams quantization;
    FlowParams flow;
    double max_displacement = default_max_displacement;
    std::vector<Band> bands = default_bands();
    double detail_gain = default_detail_gain;
    AnalysisToggles enabled;
    /// Fan the per-frame analyses out to worker threads; they rejoin before
    /// anything is emitted.
    bool parallel = false;

    void validate() const
    {
        quantization.validate();
        flow.validate();
        if (!(max_displacement > 0.0))
            throw Error("max_displacement must be positive");
        if (bands.empty())
            throw Error("at least one detail band is required");
        for (const Band& b : bands)
            b.validate();
        if (!(detail_gain > 0.0))
            throw Error("detail gain must be positive");
    }
};

/// Per-frame descriptor vector. Disabled analyses report 0.
struct DescriptorFrame {
    double timestamp_ms = 0.0;
    double warmth = 0.0;
    double sharpness = 0.0;
    double detail = 0.0;
    std::vector<double> detail_bands;
    double luminance = 0.0;
    MotionStats motion;
};

/// Scalar descriptors addressable by name (mapping inputs, table columns).
inline const std::vector<std::string>& descriptor_names()
{
    static const std::vector<std::string> names{"warmth",   "sharpness", "detail", "luminance", "motion_global",
                                                "motion_h", "motion_v",  "pan_x",  "pan_y"};
    return names;
}

inline bool is_descriptor(std::string_view name)
{
    for (const std::string& n : descriptor_names()) {
        if (n == name)
            return true;
    }
    return false;
}

inline double descriptor_value(const DescriptorFrame& d, std::string_view name)
{
    if (name == "warmth") return d.warmth;
    if (name == "sharpness") return d.sharpness;
    if (name == "detail") return d.detail;
    if (name == "luminance") return d.luminance;
    if (name == "motion_global") return d.motion.global;
    if (name == "motion_h") return d.motion.mean_h;
    if (name == "motion_v") return d.motion.mean_v;
    if (name == "pan_x") return d.motion.pan_x;
    if (name == "pan_y") return d.motion.pan_y;
    throw Error("unknown descriptor");
}

/// Runs every enabled analysis on `f`. Motion needs `prev` (same shape);
/// without it the motion statistics stay at their zero-field values.
inline DescriptorFrame analyze_frame(const Frame& f, const Frame* prev, const AnalysisConfig& cfg)
{
    if (f.empty())
        throw Error("degenerate frame");
    if (prev && !prev->same_shape(f))
        throw Error("frame size mismatch");

    DescriptorFrame out;
    out.timestamp_ms = f.timestamp_ms();
    out.detail_bands.assign(cfg.bands.size(), 0.0);

    auto run_warmth = [&] { return cfg.enabled.warmth ? warmth(f, cfg.quantization) : 0.0; };
    auto run_sharpness = [&] { return cfg.enabled.sharpness ? sharpness(f) : 0.0; };
    auto run_detail = [&] {
        return cfg.enabled.detail ? detail(f, cfg.bands, cfg.detail_gain) : DetailResult{0.0, {}};
    };
    auto run_motion = [&] {
        if (!cfg.enabled.motion || prev == nullptr)
            return MotionStats{};
        return motion_stats(horn_schunck(*prev, f, cfg.flow), cfg.max_displacement);
    };

    DetailResult det;
    if (cfg.parallel) {
        auto fw = std::async(std::launch::async, run_warmth);
        auto fs = std::async(std::launch::async, run_sharpness);
        auto fd = std::async(std::launch::async, run_detail);
        out.motion = run_motion();
        out.warmth = fw.get();
        out.sharpness = fs.get();
        det = fd.get();
    } else {
        out.warmth = run_warmth();
        out.sharpness = run_sharpness();
        det = run_detail();
        out.motion = run_motion();
    }
    if (cfg.enabled.detail) {
        out.detail = det.overall;
        out.detail_bands = std::move(det.per_band);
    }
    out.luminance = cfg.enabled.luminance ? mean_luminance(f) : 0.0;
    return out;
}

} // namespace vivo
