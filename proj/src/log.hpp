#pragma once

#include <sstream>
#include <string>

namespace bayesperf {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Level comes from the BAYESPERF_LOG environment variable
// (error|warn|info|debug, default warn) unless overridden programmatically.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_message(LogLevel level, const std::string& msg);

namespace detail {
template <typename... Args>
std::string log_format(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}
}  // namespace detail

#define BP_LOG(level, ...)                                                  \
    do {                                                                    \
        if (static_cast<int>(level) <= static_cast<int>(::bayesperf::log_level())) \
            ::bayesperf::log_message(level, ::bayesperf::detail::log_format(__VA_ARGS__)); \
    } while (0)

#define BP_LOG_ERROR(...) BP_LOG(::bayesperf::LogLevel::kError, __VA_ARGS__)
#define BP_LOG_WARN(...) BP_LOG(::bayesperf::LogLevel::kWarn, __VA_ARGS__)
#define BP_LOG_INFO(...) BP_LOG(::bayesperf::LogLevel::kInfo, __VA_ARGS__)
#define BP_LOG_DEBUG(...) BP_LOG(::bayesperf::LogLevel::kDebug, __VA_ARGS__)

}  // namespace bayesperf
