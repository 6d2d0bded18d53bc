#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "vivo/descriptors.hpp"
#include "vivo/error.hpp"
#include "vivo/image.hpp"
#include "vivo/mapping.hpp"
#include "vivo/osc.hpp"
#include "vivo/osc_transport.hpp"

namespace vivo {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct InputSpec {
    int width = 320;
    int height = 240;
    PixelFormat pix = PixelFormat::rgb24;
    double fps = 30.0;

    std::size_t frame_bytes() const noexcept
    {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * bytes_per_pixel(pix);
    }

    void validate() const
    {
        if (width <= 0 || height <= 0)
            throw Error("input dimensions must be positive");
        if (!(fps > 0.0))
            throw Error("input fps must be positive");
    }
};

/// "rawvideo:WxH@fps", "WxH@fps" or "WxH" (fps keeps its current value).
inline InputSpec parse_input_spec(std::string_view text, InputSpec base = {})
{
    if (text.starts_with("rawvideo:"))
        text.remove_prefix(9);
    double fps = base.fps;
    if (const auto at = text.find('@'); at != std::string_view::npos) {
        try {
            std::size_t used = 0;
            fps = std::stod(std::string(text.substr(at + 1)), &used);
            if (used != text.size() - at - 1)
                throw Error("");
        } catch (const std::exception&) {
            throw Error("invalid fps in input spec '" + std::string(text) + "'");
        }
        text = text.substr(0, at);
    }
    const auto x = text.find('x');
    if (x == std::string_view::npos)
        throw Error("input spec must look like rawvideo:WxH@fps");
    InputSpec spec = base;
    try {
        std::size_t used_w = 0, used_h = 0;
        const std::string w(text.substr(0, x)), h(text.substr(x + 1));
        spec.width = std::stoi(w, &used_w);
        spec.height = std::stoi(h, &used_h);
        if (used_w != w.size() || used_h != h.size())
            throw Error("");
    } catch (const std::exception&) {
        throw Error("invalid dimensions in input spec '" + std::string(text) + "'");
    }
    spec.fps = fps;
    spec.validate();
    return spec;
}

struct EngineConfig {
    InputSpec input;
    AnalysisConfig analysis;
    MappingState mapping;
    std::vector<Preset> presets;
    std::optional<Endpoint> osc_target;
    std::string osc_namespace = "/vivo";
    std::size_t osc_queue = 1024;
    std::optional<Endpoint> api_bind;
    double monitor_hz = 20.0;
    /// Write mapping and preset edits back to the file the config came from.
    bool persist = false;
    std::string source_path;

    void validate() const
    {
        input.validate();
        analysis.validate();
        mapping.validate();
        for (const MappingInput& in : mapping.inputs) {
            if (!is_descriptor(in.descriptor))
                throw Error("unknown descriptor in mapping: " + in.descriptor);
        }
        validate_osc_address(osc_namespace);
        if (!(monitor_hz > 0.0))
            throw Error("monitor rate must be positive");
        if (osc_queue == 0)
            throw Error("osc queue capacity must be positive");
    }
};

namespace internal {

inline Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error("cannot read " + path.string());
    try {
        return Json::parse(is);
    } catch (const Json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

} // namespace internal

/// Builds a config from its JSON form (docs/config.md). `base_dir` resolves
/// a mapping given as a file path.
inline EngineConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = ".")
{
    EngineConfig cfg;
    try {
        if (const auto in = j.find("input"); in != j.end()) {
            cfg.input.width = in->value("width", cfg.input.width);
            cfg.input.height = in->value("height", cfg.input.height);
            cfg.input.pix = parse_pixel_format(in->value("pix", std::string("rgb24")));
            cfg.input.fps = in->value("fps", cfg.input.fps);
        }
        if (const auto a = j.find("analysis"); a != j.end()) {
            AnalysisConfig& an = cfg.analysis;
            if (const auto q = a->find("quantization"); q != a->end()) {
                an.quantization.h_bins = q->value("h_bins", an.quantization.h_bins);
                an.quantization.s_bins = q->value("s_bins", an.quantization.s_bins);
                an.quantization.v_bins = q->value("v_bins", an.quantization.v_bins);
            }
            if (const auto f = a->find("flow"); f != a->end()) {
                an.flow.alpha = f->value("alpha", an.flow.alpha);
                an.flow.iterations = f->value("iterations", an.flow.iterations);
                an.max_displacement = f->value("max_displacement", an.max_displacement);
            }
            if (const auto d = a->find("detail"); d != a->end()) {
                an.detail_gain = d->value("gain", an.detail_gain);
                if (const auto bands = d->find("bands"); bands != d->end()) {
                    an.bands.clear();
                    for (const Json& b : *bands)
                        an.bands.push_back({b.at("offset").get<double>(), b.at("width").get<double>()});
                }
            }
            if (const auto e = a->find("enabled"); e != a->end()) {
                an.enabled.warmth = e->value("warmth", true);
                an.enabled.sharpness = e->value("sharpness", true);
                an.enabled.detail = e->value("detail", true);
                an.enabled.luminance = e->value("luminance", true);
                an.enabled.motion = e->value("motion", true);
            }
            an.parallel = a->value("parallel", an.parallel);
        }
        if (const auto m = j.find("mapping"); m != j.end()) {
            if (m->is_string())
                cfg.mapping = parse_mapping(internal::read_json_file(base_dir / m->get<std::string>()));
            else
                cfg.mapping = parse_mapping(*m);
        }
        cfg.presets = j.value("presets", std::vector<Preset>{});
        if (const auto o = j.find("osc"); o != j.end()) {
            if (o->contains("send"))
                cfg.osc_target = parse_endpoint(o->at("send").get<std::string>());
            cfg.osc_namespace = o->value("namespace", cfg.osc_namespace);
            cfg.osc_queue = o->value("queue_capacity", cfg.osc_queue);
        }
        if (const auto api = j.find("api"); api != j.end()) {
            if (api->contains("bind"))
                cfg.api_bind = parse_endpoint(api->at("bind").get<std::string>());
            cfg.persist = api->value("persist", false);
        }
        cfg.monitor_hz = j.value("monitor_hz", cfg.monitor_hz);
    } catch (const Json::exception& e) {
        throw Error(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline EngineConfig load_config(const std::string& path)
{
    const std::filesystem::path p(path);
    EngineConfig cfg = config_from_json(internal::read_json_file(p), p.parent_path());
    cfg.source_path = path;
    return cfg;
}

inline Json config_to_json(const EngineConfig& cfg)
{
    Json bands = Json::array();
    for (const Band& b : cfg.analysis.bands)
        bands.push_back({{"offset", b.offset}, {"width", b.width}});
    const AnalysisConfig& a = cfg.analysis;
    Json j{
        {"input",
         {{"width", cfg.input.width}, {"height", cfg.input.height},
          {"pix", std::string(to_string(cfg.input.pix))}, {"fps", cfg.input.fps}}},
        {"analysis",
         {{"quantization",
           {{"h_bins", a.quantization.h_bins}, {"s_bins", a.quantization.s_bins}, {"v_bins", a.quantization.v_bins}}},
          {"flow",
           {{"alpha", a.flow.alpha}, {"iterations", a.flow.iterations}, {"max_displacement", a.max_displacement}}},
          {"detail", {{"gain", a.detail_gain}, {"bands", bands}}},
          {"enabled",
           {{"warmth", a.enabled.warmth}, {"sharpness", a.enabled.sharpness}, {"detail", a.enabled.detail},
            {"luminance", a.enabled.luminance}, {"motion", a.enabled.motion}}},
          {"parallel", a.parallel}}},
        {"mapping", cfg.mapping},
        {"presets", cfg.presets},
        {"osc", {{"namespace", cfg.osc_namespace}, {"queue_capacity", cfg.osc_queue}}},
        {"monitor_hz", cfg.monitor_hz},
    };
    if (cfg.osc_target)
        j["osc"]["send"] = cfg.osc_target->str();
    j["api"] = {{"persist", cfg.persist}};
    if (cfg.api_bind)
        j["api"]["bind"] = cfg.api_bind->str();
    return j;
}

// ---------------------------------------------------------------------------
// Per-frame processing
// ---------------------------------------------------------------------------

struct ProcessedFrame {
    DescriptorFrame descriptors;
    std::vector<double> mapped;  // one value per mapping output
    std::vector<osc::Message> messages;
};

/// Raw descriptor messages under `ns`; disabled analyses are omitted.
inline std::vector<osc::Message> descriptor_messages(const DescriptorFrame& d, const AnalysisToggles& on,
                                                     const std::string& ns)
{
    auto f = [](double v) { return osc::Value(static_cast<float>(v)); };
    std::vector<osc::Message> out;
    if (on.warmth)
        out.push_back({ns + "/warmness", {f(d.warmth)}});
    if (on.sharpness)
        out.push_back({ns + "/sharpness", {f(d.sharpness)}});
    if (on.detail) {
        out.push_back({ns + "/detail", {f(d.detail)}});
        osc::Message bands{ns + "/detail/bands"};
        for (double b : d.detail_bands)
            bands.args.push_back(f(b));
        out.push_back(std::move(bands));
    }
    if (on.luminance)
        out.push_back({ns + "/luminance", {f(d.luminance)}});
    if (on.motion) {
        const MotionStats& m = d.motion;
        out.push_back({ns + "/motion", {f(m.global)}});
        out.push_back({ns + "/motion/h", {f(m.mean_h)}});
        out.push_back({ns + "/motion/v", {f(m.mean_v)}});
        out.push_back({ns + "/motion/pan", {f(m.pan_x), f(m.pan_y)}});
        out.push_back({ns + "/motion/channels",
                       {f(m.channel_weights[0]), f(m.channel_weights[1]), f(m.channel_weights[2]),
                        f(m.channel_weights[3])}});
    }
    return out;
}

/// Mapping applied to a descriptor frame: one value per output.
inline std::vector<double> mapped_values(const DescriptorFrame& d, const MappingState& mapping)
{
    std::vector<double> raw;
    raw.reserve(mapping.inputs.size());
    for (const MappingInput& in : mapping.inputs)
        raw.push_back(descriptor_value(d, in.descriptor));
    return mapping.apply(raw);
}

/// Analyses one frame and builds its OSC messages: the raw descriptors
/// followed by every mapped output.
inline ProcessedFrame process_frame(const Frame& f, const Frame* prev, const EngineConfig& cfg,
                                    const MappingState& mapping)
{
    ProcessedFrame out;
    out.descriptors = analyze_frame(f, prev, cfg.analysis);
    out.messages = descriptor_messages(out.descriptors, cfg.analysis.enabled, cfg.osc_namespace);
    out.mapped = mapped_values(out.descriptors, mapping);
    for (std::size_t j = 0; j < mapping.outputs.size(); ++j)
        out.messages.push_back({mapping.outputs[j].address, {static_cast<float>(out.mapped[j])}});
    return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricsSnapshot {
    std::uint64_t frames_in = 0;
    std::uint64_t frames_processed = 0;
    std::uint64_t frames_dropped = 0;
    std::uint64_t packets_sent = 0;
    std::uint64_t packets_dropped = 0;
    std::uint64_t stream_resets = 0;
    std::size_t osc_queue_depth = 0;
    double latency_p50_ms = 0.0;
    double latency_p95_ms = 0.0;
    double latency_max_ms = 0.0;
    double fps = 0.0;
    std::vector<std::uint64_t> histogram;  // 1 ms buckets, last bucket is overflow
};

inline void to_json(Json& j, const MetricsSnapshot& m)
{
    j = Json{{"frames_in", m.frames_in},
             {"frames_processed", m.frames_processed},
             {"frames_dropped", m.frames_dropped},
             {"packets_sent", m.packets_sent},
             {"packets_dropped", m.packets_dropped},
             {"stream_resets", m.stream_resets},
             {"osc_queue_depth", m.osc_queue_depth},
             {"latency_ms", {{"p50", m.latency_p50_ms}, {"p95", m.latency_p95_ms}, {"max", m.latency_max_ms}}},
             {"fps", m.fps},
             {"latency_histogram_ms", m.histogram}};
}

/// Analysis latency histogram, throughput and drop counters. Counters only
/// grow within a run.
class PipelineMetrics {
public:
    using Clock = std::chrono::steady_clock;
    static constexpr std::size_t buckets = 101;
    static constexpr std::size_t sample_cap = 1 << 16;

    PipelineMetrics() : histogram_(buckets, 0) {}

    void frame_in()
    {
        std::lock_guard lock(mutex_);
        ++frames_in_;
    }

    void frame_dropped()
    {
        std::lock_guard lock(mutex_);
        ++frames_dropped_;
    }

    void stream_reset()
    {
        std::lock_guard lock(mutex_);
        ++resets_;
    }

    void record(double latency_ms, Clock::time_point done = Clock::now())
    {
        std::lock_guard lock(mutex_);
        if (frames_processed_ == 0)
            first_ = done;
        last_ = done;
        ++frames_processed_;
        const auto b = std::min<std::size_t>(static_cast<std::size_t>(std::max(latency_ms, 0.0)), buckets - 1);
        ++histogram_[b];
        if (samples_.size() < sample_cap)
            samples_.push_back(latency_ms);
        else
            samples_[next_sample_++ % sample_cap] = latency_ms;
        max_latency_ = std::max(max_latency_, latency_ms);
    }

    void set_sender_stats(const SenderStats& s)
    {
        std::lock_guard lock(mutex_);
        sender_ = s;
    }

    MetricsSnapshot snapshot() const
    {
        std::lock_guard lock(mutex_);
        MetricsSnapshot m;
        m.frames_in = frames_in_;
        m.frames_processed = frames_processed_;
        m.frames_dropped = frames_dropped_;
        m.stream_resets = resets_;
        m.packets_sent = sender_.sent;
        m.packets_dropped = sender_.dropped + sender_.errors;
        m.osc_queue_depth = sender_.queue_depth;
        m.latency_max_ms = max_latency_;
        m.latency_p50_ms = percentile(0.50);
        m.latency_p95_ms = percentile(0.95);
        if (frames_processed_ > 1) {
            const double span = std::chrono::duration<double>(last_ - first_).count();
            if (span > 0.0)
                m.fps = static_cast<double>(frames_processed_ - 1) / span;
        }
        m.histogram = histogram_;
        return m;
    }

private:
    double percentile(double q) const
    {
        if (samples_.empty())
            return 0.0;
        std::vector<double> s = samples_;
        const std::size_t k = std::min(s.size() - 1, static_cast<std::size_t>(std::ceil(q * s.size())) - 1);
        std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
        return s[k];
    }

    mutable std::mutex mutex_;
    std::uint64_t frames_in_ = 0;
    std::uint64_t frames_processed_ = 0;
    std::uint64_t frames_dropped_ = 0;
    std::uint64_t resets_ = 0;
    std::vector<std::uint64_t> histogram_;
    std::vector<double> samples_;
    std::size_t next_sample_ = 0;
    double max_latency_ = 0.0;
    Clock::time_point first_{};
    Clock::time_point last_{};
    SenderStats sender_{};
};

// ---------------------------------------------------------------------------
// Pipeline: ordered per-frame processing with a one-frame history
// ---------------------------------------------------------------------------

/// Feeds frames in stream order through process_frame, keeps the previous
/// frame for motion, reads the mapping snapshot once per frame and hands the
/// messages to the sink.
class Pipeline {
public:
    using Sink = std::function<void(const std::vector<osc::Message>&)>;

    Pipeline(EngineConfig cfg, MappingStore& store, Sink sink, PipelineMetrics* metrics = nullptr)
        : cfg_(std::move(cfg)), store_(store), sink_(std::move(sink)), metrics_(metrics)
    {
        cfg_.analysis.validate();
    }

    ProcessedFrame push(Frame f)
    {
        if (prev_ && !prev_->same_shape(f)) {
            spdlog::warn("frame size changed {}x{} -> {}x{}; resetting stream", prev_->width(), prev_->height(),
                         f.width(), f.height());
            prev_.reset();
            if (metrics_)
                metrics_->stream_reset();
        }
        const auto mapping = store_.snapshot();
        const auto t0 = PipelineMetrics::Clock::now();
        ProcessedFrame out = process_frame(f, prev_ ? &*prev_ : nullptr, cfg_, *mapping);
        const auto t1 = PipelineMetrics::Clock::now();
        if (metrics_)
            metrics_->record(std::chrono::duration<double, std::milli>(t1 - t0).count(), t1);
        if (sink_)
            sink_(out.messages);
        prev_ = std::move(f);
        return out;
    }

    void reset() { prev_.reset(); }
    const EngineConfig& config() const noexcept { return cfg_; }

private:
    EngineConfig cfg_;
    MappingStore& store_;
    Sink sink_;
    PipelineMetrics* metrics_;
    std::optional<Frame> prev_;
};

/// Monitor payload for one processed frame.
inline Json monitor_json(const ProcessedFrame& p, const MappingState& mapping, std::uint64_t frame_index)
{
    const DescriptorFrame& d = p.descriptors;
    Json mapped = Json::object();
    for (std::size_t j = 0; j < mapping.outputs.size() && j < p.mapped.size(); ++j)
        mapped[mapping.outputs[j].name] = p.mapped[j];
    return Json{{"frame", frame_index},
                {"timestamp_ms", d.timestamp_ms},
                {"warmth", d.warmth},
                {"sharpness", d.sharpness},
                {"detail", d.detail},
                {"detail_bands", d.detail_bands},
                {"luminance", d.luminance},
                {"motion",
                 {{"h", d.motion.mean_h},
                  {"v", d.motion.mean_v},
                  {"global", d.motion.global},
                  {"pan", {d.motion.pan_x, d.motion.pan_y}},
                  {"channels", d.motion.channel_weights}}},
                {"mapped", mapped}};
}

} // namespace vivo
