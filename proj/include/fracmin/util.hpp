#pragma once

#include <cstddef>
#include <functional>

namespace fracmin {

// Global worker count for table assembly. Results are written to
// preassigned slots and reduced in a fixed order, so outputs do not depend
// on this value.
void set_thread_count(int threads);
int thread_count();

void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

} // namespace fracmin
