#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace dp {

// Process-wide worker count for element loops. Defaults to 1.
void set_thread_count(int threads);
int thread_count();

namespace parallel {

// Runs body(i) for i in [0, n). Each index must write only to its own slot;
// callers merge the slots serially so results do not depend on the thread count.
// If bodies throw, the exception from the lowest index is rethrown.
template <class Body>
void for_each_index(std::size_t n, Body&& body) {
  const long count = static_cast<long>(n);
  const int threads = ::dp::thread_count();
  if (threads <= 1) {
    for (long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  bool failed = false;
#if defined(DP_HAVE_OPENMP)
#pragma omp parallel for schedule(static) num_threads(threads) reduction(|| : failed)
#endif
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
      failed = true;
    }
  }
  if (failed) {
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
}

// Ordered sum of per-index terms.
template <class Term>
double ordered_sum(std::size_t n, Term&& term) {
  std::vector<double> parts(n);
  for_each_index(n, [&](std::size_t i) { parts[i] = term(i); });
  double total = 0.0;
  for (double v : parts) total += v;
  return total;
}

}  // namespace parallel
}  // namespace dp
