#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace copt {

// Serial keeps the reference code path; Parallel runs the same per-item work
// under OpenMP. Items must be independent so both modes produce bitwise
// identical results.
enum class ExecMode { Serial, Parallel };

template <typename Fn>
void parallel_for(int64_t n, ExecMode mode, Fn&& fn) {
#ifdef _OPENMP
    if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
#else
    (void)mode;
#endif
    for (int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace copt
