#pragma once

#include <cstddef>
#include <functional>

namespace convexa {

/// Worker cap for parallel loops. Results never depend on this value:
/// every loop body writes to its own slot and reductions run in index order.
void set_workers(std::size_t workers);
std::size_t workers();

/// Runs body(i) for i in [0, count). Nested calls from inside a worker run
/// serially on that worker.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace convexa
