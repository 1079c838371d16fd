#pragma once

#include <spdlog/spdlog.h>

namespace drcombine {

// Library-wide logger writing to stderr. The level is read once from the
// DRCOMBINE_LOG environment variable (trace, debug, info, warn, error, off);
// default is warn.
spdlog::logger& logger();

}  // namespace drcombine
