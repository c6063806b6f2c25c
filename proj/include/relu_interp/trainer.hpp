#pragma once

#include <set>

#include "relu_interp/solvers.hpp"

namespace relu_interp {

struct TrainConfig {
  double lr = 0.01;
  int steps = 1000;
  std::set<int> freeze;     // 0-based indices into Network::layers
  int record_every = 1;
  std::uint64_t seed = 0;
  bool reinit = false;      // re-draw unfrozen layers uniform(-1,1)/sqrt(fan_in)
  double divergence_threshold = 1e12;
};

struct TrainTrace {
  std::vector<int> step;
  std::vector<double> loss;
  // Per recorded step: subdomain id -> number of distinct last-hidden-layer
  // activation signatures among its points. Empty when data is unlabeled.
  std::vector<std::map<int, int>> occupancy;
  Network final_net;
  bool diverged = false;
};

// Mean squared error over the dataset.
double quadratic_loss(const Network& net, const Dataset& data);

std::map<int, int> region_occupancy(const Network& net, const Dataset& data,
                                    double tau_act = kDefaultTauAct);

// Full-batch subgradient descent on the quadratic loss; the relu subgradient
// at 0 is taken as 0. Frozen layers receive no updates but still pass
// gradients through. Aborts (diverged) on non-finite or huge loss.
TrainTrace train_full_batch(Network net, const Dataset& data, const TrainConfig& cfg);

struct SpacetimeConfig {
  int max_blocks = 8;           // training blocks between direct solves
  TrainConfig train;            // steps = steps per block; output layer auto-frozen
  double accept_tol = 1e-6;     // infinity-norm residual to accept a solve
  OverparamOptions overparam;   // used when columns >= points
};

struct SpacetimeResult {
  bool solved = false;
  Network net;
  int blocks_used = 0;
  double residual = 0.0;
  std::string method;  // "overparam", "fit" or ""
};

// Alternates direct output-layer solves against the last-hidden-layer matrix
// with blocks of hidden-layer training (output layer frozen). Accepting a
// solve writes the coefficients into the output layer and zeroes its bias.
// Scalar targets only.
SpacetimeResult spacetime_search(Network net, const Dataset& data,
                                 const SpacetimeConfig& cfg);

}  // namespace relu_interp
