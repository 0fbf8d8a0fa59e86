#pragma once

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace gridstate {

/// Execution policy for the data-parallel evaluation kernels. Serial and
/// parallel variants compute identical results (disjoint writes, fixed
/// per-slot summation order); Auto switches on problem size.
enum class ExecPolicy { Auto, Serial, Parallel };

inline bool run_parallel(ExecPolicy policy, int work_size) {
#if defined(_OPENMP)
    if (policy == ExecPolicy::Parallel) return true;
    if (policy == ExecPolicy::Auto) return work_size >= 4096;
    return false;
#else
    (void)policy;
    (void)work_size;
    return false;
#endif
}

}  // namespace gridstate
