#pragma once

#include <functional>

namespace immpi {

/// Worker cap for parallel loops; 0 means hardware concurrency.
void set_max_threads(int threads);
int max_threads();

/// Splits [0, n) into contiguous chunks and runs fn(begin, end) on up to
/// max_threads() workers. Chunks never overlap; fn must not touch shared state
/// outside its range.
void parallel_for(int n, const std::function<void(int, int)>& fn);

}  // namespace immpi
