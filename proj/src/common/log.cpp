#include "cpv/common/log.h"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace cpv {

void init_logging() {
    auto logger = spdlog::get("cpv");
    if (!logger) logger = spdlog::stderr_color_mt("cpv");
    logger->set_pattern("[%H:%M:%S] [%^%l%$] %v");
    spdlog::set_default_logger(logger);

    spdlog::level::level_enum level = spdlog::level::info;
    if (const char* env = std::getenv("CPV_LOG")) {
        std::string_view v(env);
        if (v == "error") level = spdlog::level::err;
        else if (v == "debug") level = spdlog::level::debug;
    }
    spdlog::set_level(level);
}

}  // namespace cpv
