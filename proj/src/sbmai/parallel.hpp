#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace sbmai {

// Process-wide worker count. 0 selects std::thread::hardware_concurrency().
void set_num_threads(int threads);
int num_threads();

// Runs body(i) for i in [0, count). Work is split into contiguous chunks; each
// index is visited exactly once. Callers write into per-index slots and reduce
// afterwards in index order, so results never depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Pairwise (tree) summation in index order. Deterministic for a given input.
double pairwise_sum(const std::vector<double>& values);

}  // namespace sbmai
