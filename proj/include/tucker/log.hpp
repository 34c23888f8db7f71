#pragma once

#include <spdlog/spdlog.h>

namespace tucker {

/// Applies the TUCKER_LOG environment variable (trace, debug, info, warn,
/// error, off) to the default logger. Defaults to warn.
void configure_logging();

}  // namespace tucker
