#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "relu_interp/types.hpp"

namespace relu_interp {

// Thread budget from RELU_INTERP_THREADS (0 or unset = auto).
int thread_budget();

// Runs fn(i) for i in [0, n). Each index must write only its own slots, so
// results do not depend on the schedule.
void parallel_for(Index n, const std::function<void(Index)>& fn);

// Deterministic, platform-independent uniform double in [lo, hi).
template <typename Rng>
double uniform_double(Rng& rng, double lo, double hi) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
  return lo + (hi - lo) * u;
}

// Standard normal via Box-Muller on uniform_double; deterministic.
template <typename Rng>
double normal_double(Rng& rng) {
  double u1 = 0.0;
  do {
    u1 = uniform_double(rng, 0.0, 1.0);
  } while (u1 <= 0.0);
  double u2 = uniform_double(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace relu_interp
