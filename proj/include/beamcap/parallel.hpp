// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace beamcap {

// BEAMCAP_THREADS if set to a positive integer, else hardware parallelism.
int default_worker_count();

// Calls body(i) for i in [0, n). Each index runs exactly once; any thread may run it.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

// Pairwise summation. The result depends only on the order of the input.
double pairwise_sum(std::span<const double> values);

struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
};

SampleStats sample_stats(std::span<const double> values);

}  // namespace beamcap
