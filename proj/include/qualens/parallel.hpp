#ifndef QUALENS_PARALLEL_HPP
#define QUALENS_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace qualens {

/// Worker count: QUALENS_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Calls body(i) for every i in [0, n). Runs on up to thread_count() threads;
/// nested calls from inside a worker run serially. Callers write results into
/// slots indexed by i, so the outcome is independent of the thread count.
/// The first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace qualens

#endif
