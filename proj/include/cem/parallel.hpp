#pragma once

#include <functional>

namespace cem {

/// Worker cap for the per-element and per-neighborhood loops. Results do not
/// depend on the setting: every loop writes to disjoint slots and reductions
/// run sequentially in index order afterwards.
void set_thread_count(int n);
int thread_count();

/// Run fn(0..n-1), split over the configured workers in contiguous chunks.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace cem
