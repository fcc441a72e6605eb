#include "deepssm/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace deepssm::log {

void init_from_env() {
  auto logger = spdlog::stderr_color_mt("deepssm");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("DEEPSSM_LOG");
  const auto level = env ? spdlog::level::from_str(env) : spdlog::level::warn;
  // from_str maps unknown names to off; keep warnings in that case.
  spdlog::set_level(env && level == spdlog::level::off && std::string(env) != "off"
                        ? spdlog::level::warn
                        : level);
}

}  // namespace deepssm::log
