#pragma once

namespace omninav {

/// Selects between the OpenMP kernel and the serial reference it is tested against.
/// Both paths produce bit-identical results.
enum class Execution { Serial, Parallel };

/// Threads OpenMP will use for Execution::Parallel (1 when built without OpenMP).
int parallel_threads();

}  // namespace omninav
