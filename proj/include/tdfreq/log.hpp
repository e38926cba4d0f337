#pragma once

#include <functional>
#include <string>

namespace tdfreq::log {

using Sink = std::function<void(const std::string&)>;

// Replaces the warning sink (default writes to stderr). Returns the previous one.
Sink set_warning_sink(Sink sink);

void warn(const std::string& message);

}  // namespace tdfreq::log
