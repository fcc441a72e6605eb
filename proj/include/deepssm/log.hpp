#pragma once

#include <spdlog/spdlog.h>

namespace deepssm::log {

/// Applies the level named by the DEEPSSM_LOG environment variable
/// (trace, debug, info, warn, error, off). Defaults to warn.
void init_from_env();

using spdlog::debug;
using spdlog::info;
using spdlog::warn;

}  // namespace deepssm::log
