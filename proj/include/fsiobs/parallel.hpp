#pragma once

#include <functional>

namespace fsiobs {

// Worker count: FSIOBS_THREADS if set and positive, else hardware concurrency.
int worker_count();

// Runs body(i) for i in [0, n). Each index is handled by exactly one worker,
// so results are independent of the schedule.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace fsiobs
