#pragma once

namespace tiltbench {

/// Worker count for parallel kernels: the explicit override if set,
/// otherwise the OpenMP default, capped by the TILTBENCH_THREADS
/// environment variable when that parses as a positive integer.
int worker_count();

/// Process-wide override; pass 0 to clear.
void set_worker_count(int n);

}  // namespace tiltbench
