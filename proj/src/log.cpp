#include "tdfreq/log.hpp"

#include <iostream>
#include <mutex>

namespace tdfreq::log {

namespace {

std::mutex sink_mutex;

Sink& sink_slot() {
    static Sink sink = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
    return sink;
}

}  // namespace

Sink set_warning_sink(Sink sink) {
    std::lock_guard lock(sink_mutex);
    Sink previous = std::move(sink_slot());
    sink_slot() = std::move(sink);
    return previous;
}

void warn(const std::string& message) {
    std::lock_guard lock(sink_mutex);
    if (sink_slot()) sink_slot()(message);
}

}  // namespace tdfreq::log
