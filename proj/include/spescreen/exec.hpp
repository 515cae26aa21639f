#pragma once

namespace spescreen {

// Selects between the OpenMP kernel and its serial reference. Both must
// produce identical results; the serial path exists for testing and
// benchmarking.
enum class Exec { Serial, Parallel };

// Sets the OpenMP thread count (no-op for n <= 0).
void set_thread_count(int n);
int thread_count();

}  // namespace spescreen
