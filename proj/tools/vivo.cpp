// vivo: live video descriptor engine, offline corpus analysis and OSC
// mapping proxy.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <sys/stat.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "vivo/corpus.hpp"
#include "vivo/engine.hpp"
#include "vivo/frame_source.hpp"
#include "vivo/log.hpp"
#include "vivo/proxy.hpp"
#include "vivo/stream.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

void install_signal_handlers()
{
    struct sigaction sa {};
    sa.sa_handler = on_signal;
    sigemptyset(&sa.sa_mask);
    sigaction(SIGINT, &sa, nullptr);
    sigaction(SIGTERM, &sa, nullptr);
    std::signal(SIGPIPE, SIG_IGN);
}

vivo::EngineConfig base_config(const std::string& path)
{
    if (path.empty())
        return vivo::config_from_json(vivo::Json::object());
    return vivo::load_config(path);
}

void print_summary(const vivo::MetricsSnapshot& m)
{
    std::fprintf(stderr,
                 "frames in %llu, processed %llu, dropped %llu | osc sent %llu, dropped %llu | "
                 "latency p50 %.2f ms, p95 %.2f ms, max %.2f ms | %.1f fps\n",
                 static_cast<unsigned long long>(m.frames_in), static_cast<unsigned long long>(m.frames_processed),
                 static_cast<unsigned long long>(m.frames_dropped), static_cast<unsigned long long>(m.packets_sent),
                 static_cast<unsigned long long>(m.packets_dropped), m.latency_p50_ms, m.latency_p95_ms,
                 m.latency_max_ms, m.fps);
}

struct StreamArgs {
    std::string input;
    std::string pix;
    std::string config;
    std::string osc;
    std::string api;
    std::string from = "-";
    double monitor_hz = 0.0;
    bool no_pace = false;
};

int run_stream_cmd(const StreamArgs& a)
{
    vivo::EngineConfig cfg = base_config(a.config);
    if (!a.input.empty())
        cfg.input = vivo::parse_input_spec(a.input, cfg.input);
    if (!a.pix.empty())
        cfg.input.pix = vivo::parse_pixel_format(a.pix);
    if (!a.osc.empty())
        cfg.osc_target = vivo::parse_endpoint(a.osc);
    if (!a.api.empty())
        cfg.api_bind = vivo::parse_endpoint(a.api);
    if (a.monitor_hz > 0.0)
        cfg.monitor_hz = a.monitor_hz;
    cfg.validate();

    vivo::InputFile in(a.from);
    spdlog::info("stream {}x{} {} @ {} fps", cfg.input.width, cfg.input.height, vivo::to_string(cfg.input.pix),
                 cfg.input.fps);
    vivo::StreamOptions opts;
    opts.pace = !a.no_pace;
    const vivo::MetricsSnapshot m = vivo::run_stream(cfg, in.fd(), g_stop, opts);
    print_summary(m);
    return 0;
}

struct AnalyzeArgs {
    std::string file;
    std::string output;
    std::string input;
    std::string pix;
    std::string config;
};

int run_analyze_cmd(const AnalyzeArgs& a)
{
    vivo::EngineConfig cfg = base_config(a.config);
    if (!a.input.empty())
        cfg.input = vivo::parse_input_spec(a.input, cfg.input);
    if (!a.pix.empty())
        cfg.input.pix = vivo::parse_pixel_format(a.pix);
    cfg.validate();

    const std::size_t frame_bytes = cfg.input.frame_bytes();
    if (a.file != "-") {
        struct stat st {};
        if (::stat(a.file.c_str(), &st) != 0)
            throw vivo::Error("cannot open " + a.file);
        if (S_ISREG(st.st_mode) && static_cast<std::size_t>(st.st_size) % frame_bytes != 0)
            throw vivo::Error("undecodable input: " + a.file + " is " + std::to_string(st.st_size) +
                              " bytes, not a whole number of " + std::to_string(cfg.input.width) + "x" +
                              std::to_string(cfg.input.height) + " " + std::string(vivo::to_string(cfg.input.pix)) +
                              " frames");
    }

    vivo::InputFile in(a.file);
    vivo::RawFrameReader reader(in.fd(), cfg.input.width, cfg.input.height, cfg.input.pix, cfg.input.fps);
    const vivo::DescriptorTable table = vivo::analyze_video([&] { return reader.next(&g_stop); }, cfg.analysis);
    if (reader.trailing_bytes() > 0)
        throw vivo::Error("undecodable input: stream ended inside a frame");

    if (a.output.empty() || a.output == "-")
        vivo::write_csv(std::cout, table);
    else
        vivo::save_csv(a.output, table);
    spdlog::info("analyzed {} frames", table.size());
    return 0;
}

struct ProxyArgs {
    std::uint16_t listen = 0;
    std::string target;
    std::string config;
};

int run_proxy_cmd(const ProxyArgs& a)
{
    const vivo::EngineConfig cfg = base_config(a.config);
    vivo::MappingStore store(cfg.mapping, cfg.presets);
    vivo::ProxyService proxy(a.listen, vivo::parse_endpoint(a.target), store, cfg.osc_queue);
    spdlog::info("proxy listening on {} -> {}", proxy.port(), a.target);
    while (!g_stop.load())
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    proxy.stop();
    const vivo::ProxyStats s = proxy.stats();
    std::fprintf(stderr, "received %llu (malformed %llu), mapped %llu, forwarded %llu, sent %llu\n",
                 static_cast<unsigned long long>(s.received), static_cast<unsigned long long>(s.malformed),
                 static_cast<unsigned long long>(s.mapped), static_cast<unsigned long long>(s.forwarded),
                 static_cast<unsigned long long>(s.sender.sent));
    return 0;
}

struct PairArgs {
    std::string a;
    std::string b;
    std::vector<std::string> dims;
    std::vector<double> values;
    std::string mode = "pre";
};

int run_pair_cmd(const PairArgs& p)
{
    const vivo::DescriptorTable a = vivo::load_csv(p.a);
    const vivo::DescriptorTable b = vivo::load_csv(p.b);
    const vivo::Pairing r = vivo::pair(a, b, {p.dims, p.values}, vivo::parse_pairing_mode(p.mode));
    std::cout << r.unit_a << ',' << r.unit_b << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    vivo::configure_logging();
    install_signal_handlers();

    CLI::App app{"vivo: video descriptors to OSC"};
    app.require_subcommand(1);

    StreamArgs sa;
    auto* stream = app.add_subcommand("stream", "Analyse a raw frame pipe live and emit OSC");
    stream->add_option("--input", sa.input, "rawvideo:WxH@fps");
    stream->add_option("--pix", sa.pix, "rgb24 or rgba");
    stream->add_option("--config", sa.config, "Engine config (JSON)")->check(CLI::ExistingFile);
    stream->add_option("--osc,--send", sa.osc, "OSC destination host:port");
    stream->add_option("--api", sa.api, "Control API bind address host:port");
    stream->add_option("--from", sa.from, "Raw frame source, - for stdin");
    stream->add_option("--monitor-hz", sa.monitor_hz, "Monitor push rate");
    stream->add_flag("--no-pace", sa.no_pace, "Do not hold ingestion to the input fps");

    AnalyzeArgs aa;
    auto* analyze = app.add_subcommand("analyze", "Write a per-frame descriptor table (CSV)");
    analyze->add_option("file", aa.file, "Raw frame file, - for stdin")->required();
    analyze->add_option("-o,--output", aa.output, "CSV output (default stdout)");
    analyze->add_option("--input,--size", aa.input, "rawvideo:WxH@fps");
    analyze->add_option("--pix", aa.pix, "rgb24 or rgba");
    analyze->add_option("--config", aa.config, "Engine config (JSON)")->check(CLI::ExistingFile);

    ProxyArgs pa;
    auto* proxy = app.add_subcommand("proxy", "Re-map incoming OSC through a mapping");
    proxy->add_option("--listen", pa.listen, "UDP port to listen on")->required();
    proxy->add_option("--target", pa.target, "OSC destination host:port")->required();
    proxy->add_option("--config", pa.config, "Engine config (JSON)")->check(CLI::ExistingFile);

    PairArgs pp;
    auto* pairc = app.add_subcommand("pair", "Pick a unit pair from two descriptor tables");
    pairc->add_option("a", pp.a, "Corpus A (CSV)")->required()->check(CLI::ExistingFile);
    pairc->add_option("b", pp.b, "Corpus B (CSV)")->required()->check(CLI::ExistingFile);
    pairc->add_option("--dims", pp.dims, "Cursor dimensions")->required()->delimiter(',');
    pairc->add_option("--values", pp.values, "Cursor position")->required()->delimiter(',');
    pairc->add_option("--mode", pp.mode, "pre or post");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*stream)
            return run_stream_cmd(sa);
        if (*analyze)
            return run_analyze_cmd(aa);
        if (*proxy)
            return run_proxy_cmd(pa);
        if (*pairc)
            return run_pair_cmd(pp);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
