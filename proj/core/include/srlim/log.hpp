#pragma once

#include <string>

namespace srlim::log {

// Warnings go to stderr; quiet mode (used by tests) silences them.
void warn(const std::string& message);
// Emits `message` only the first time `key` is seen in this process.
void warn_once(const std::string& key, const std::string& message);
void set_quiet(bool quiet);

}  // namespace srlim::log
