#include "srlim/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <set>

namespace srlim::log {
namespace {

std::atomic<bool> g_quiet{false};
std::mutex g_mutex;
std::set<std::string> g_seen;

}  // namespace

void warn(const std::string& message) {
  if (g_quiet.load()) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "warning: " << message << '\n';
}

void warn_once(const std::string& key, const std::string& message) {
  {
    std::lock_guard lock(g_mutex);
    if (!g_seen.insert(key).second) return;
  }
  warn(message);
}

void set_quiet(bool quiet) { g_quiet.store(quiet); }

}  // namespace srlim::log
