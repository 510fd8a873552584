#ifndef BILEVEL_PARALLEL_HPP
#define BILEVEL_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bilevel {

inline int default_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Index-parallel map over [0, count). Workers must only write to slots owned
// by their index so that results are identical for any job count; jobs <= 1
// is the serial reference path.
inline void parallel_for(std::size_t count, int jobs,
                         const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (long long i = 0; i < static_cast<long long>(count); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
#else
  for (std::size_t i = 0; i < count; ++i) body(i);
#endif
}

}  // namespace bilevel

#endif
