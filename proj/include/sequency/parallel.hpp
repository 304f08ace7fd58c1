#pragma once

namespace sequency {

/// Process-wide switch for the OpenMP kernels. Forked socket workers turn it
/// off: libgomp's thread pool does not survive fork().
bool parallel_enabled();
void set_parallel_enabled(bool enabled);

/// Threads an OpenMP region would use right now (1 when disabled or built without OpenMP).
int parallel_threads();

}  // namespace sequency
