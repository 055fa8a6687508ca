#pragma once

#include <exception>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace advfl {

/// Serial is the reference path; Parallel must reproduce it bit-for-bit.
enum class ExecPolicy { Serial, Parallel };

std::string exec_name(ExecPolicy p);
ExecPolicy parse_exec(const std::string& s);

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Runs body(i) for i in [0, n). Each index must write only its own output
/// slot; reductions happen afterwards in index order. The exception of the
/// lowest failing index is rethrown.
template <class Body>
void for_each_index(ExecPolicy policy, int n, Body&& body) {
    if (policy == ExecPolicy::Serial || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace advfl
