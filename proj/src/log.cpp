#include "nergmm/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>
#include <string>

namespace nergmm::log {

void init_from_env() {
  if (!spdlog::get("nergmm")) {
    auto logger = spdlog::stderr_logger_mt("nergmm");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  }

  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("NERGMM_LOG")) {
    const std::string v = env;
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
  }
  spdlog::set_level(level);
}

}  // namespace nergmm::log
