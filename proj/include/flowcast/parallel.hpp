#pragma once

#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flowcast {

// Runs fn(y) for every row y in [0, height). Rows must be independent;
// the result is then identical for any thread count.
template <typename Fn>
void parallel_rows(int height, Fn&& fn) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) fn(y);
}

// Sum of fn(y) over rows. Partials are stored per row and reduced in row
// order, so the value does not depend on how rows were scheduled.
template <typename Fn>
double sum_rows(int height, Fn&& fn) {
    std::vector<double> partial(static_cast<size_t>(height), 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) partial[static_cast<size_t>(y)] = fn(y);
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

inline int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_thread_count(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

} // namespace flowcast
