#pragma once

#include <cstdint>
#include <functional>

namespace cnet {

// Worker-thread cap for batch-parallel kernels. Defaults to 1 so runs are
// sequential unless a caller (the CLI --threads flag) opts in. Results are
// identical for any thread count: work is split per sample and reductions
// happen in a fixed order.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [0, n). Chunked across threads when num_threads() > 1.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace cnet
