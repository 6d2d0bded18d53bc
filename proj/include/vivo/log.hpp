#pragma once

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace vivo {

/// Applies the VIVO_LOG environment variable (trace, debug, info, warn,
/// error, critical, off) to the default logger, which writes to stderr.
/// Unset means "info".
inline void configure_logging()
{
    if (!spdlog::get("vivo"))
        spdlog::set_default_logger(spdlog::stderr_color_mt("vivo"));
    const char* env = std::getenv("VIVO_LOG");
    const std::string level = env ? env : "info";
    spdlog::set_level(spdlog::level::from_str(level));
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
}

} // namespace vivo
