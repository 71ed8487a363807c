#pragma once

#include <cstddef>
#include <functional>

namespace zrp {

/// Worker count: ZRP_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) across worker_count() threads. Work is
/// handed out by index, so results written to slot i are independent of the
/// thread count. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace zrp
