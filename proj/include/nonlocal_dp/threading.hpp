#ifndef NONLOCAL_DP_THREADING_HPP
#define NONLOCAL_DP_THREADING_HPP

#include <functional>
#include <span>

namespace nldp {

/// Worker count: requested if > 0, else NONLOCAL_DP_THREADS, else hardware.
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, n) over contiguous index chunks. Callers get
/// worker-count independent results by writing to disjoint slots.
void parallel_for(long n, const std::function<void(long)>& fn, int threads);

/// Pairwise (binary-tree) sum; deterministic for a fixed element order.
double pairwise_sum(std::span<const double> values);

}  // namespace nldp

#endif
