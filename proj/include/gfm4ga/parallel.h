#ifndef GFM4GA_PARALLEL_H_
#define GFM4GA_PARALLEL_H_

#include <cstddef>
#include <functional>
#include <string_view>

namespace gfm4ga {

// Worker count from GFM4GA_THREADS; 1 (sequential) when unset or invalid.
int thread_budget();

// Runs fn(0..n-1), spread over up to thread_budget() threads. Callers write
// results into per-index slots and reduce afterwards in index order, so
// output never depends on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

void log_warning(std::string_view message);
void log_info(std::string_view message);
// Silences log_info (warnings still print).
void set_quiet(bool quiet);

}  // namespace gfm4ga

#endif  // GFM4GA_PARALLEL_H_
