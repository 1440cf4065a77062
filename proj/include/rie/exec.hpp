#pragma once

namespace rie {

/// Execution policy for batch kernels. Every parallel kernel keeps a serial
/// reference path; both must produce bit-identical results.
enum class Exec { kSerial, kParallel };

/// Number of OpenMP threads a parallel kernel will use (1 when built without
/// OpenMP or when `exec` is serial).
int thread_count(Exec exec);

/// Caps OpenMP threads for subsequent parallel kernels; 0 restores the default.
void set_thread_limit(int n);

}  // namespace rie
