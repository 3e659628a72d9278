#ifndef LOGITDYN_PARALLEL_H_
#define LOGITDYN_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace logitdyn {

// Runs fn(0..n-1) on up to `jobs` threads (jobs <= 1 runs inline). Work items
// must be independent; the first exception thrown is rethrown on the caller.
void ParallelFor(std::size_t n, std::size_t jobs,
                 const std::function<void(std::size_t)>& fn);

}  // namespace logitdyn

#endif  // LOGITDYN_PARALLEL_H_
