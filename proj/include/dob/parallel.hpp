#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef DOB_HAVE_OPENMP
#include <omp.h>
#endif

namespace dob::parallel {

inline int max_threads() {
#ifdef DOB_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Runs body(i) for i in [0, n). Each index must write only its own output slot;
/// callers merge in index order so results match the serial loop bit for bit.
/// The first exception thrown by any body is rethrown on the calling thread.
template <typename Body>
void for_each_index(std::ptrdiff_t n, Body&& body) {
    std::exception_ptr failure;
    std::mutex failure_mutex;
#ifdef DOB_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

template <typename Body>
void for_each_index_serial(std::ptrdiff_t n, Body&& body) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
}

}  // namespace dob::parallel
