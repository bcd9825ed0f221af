#pragma once

namespace roughdrive {

/// Replica loops run either under OpenMP or as the plain serial reference.
/// Both paths see identical per-replica random streams.
enum class Exec { serial, parallel };

int max_threads() noexcept;

}  // namespace roughdrive
