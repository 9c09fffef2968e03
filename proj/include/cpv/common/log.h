#pragma once

#include <spdlog/spdlog.h>

namespace cpv {

// Reads CPV_LOG={error|info|debug} and configures the default logger.
// Unset or unrecognised values fall back to info.
void init_logging();

}  // namespace cpv
