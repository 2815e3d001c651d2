#include "dp/parallel.hpp"

#include "dp/error.hpp"

#include <atomic>

namespace dp {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int threads) {
  if (threads < 1) throw ConfigError("thread count must be >= 1");
  g_threads.store(threads);
}

int thread_count() { return g_threads.load(); }

}  // namespace dp
