#pragma once

#include "relu_interp/types.hpp"

namespace relu_interp {

// Full forward pass record: pre[i] / post[i] are layer i's pre-activations
// and outputs. No zero snapping here; relu is exactly max(0, s).
struct Trace {
  std::vector<VectorXd> pre;
  std::vector<VectorXd> post;

  const VectorXd& output() const { return post.back(); }
};

Trace eval_network(const Network& net, const VectorXd& x);

// Region signature of x relative to a set of hyperplanes: bit k is set iff
// w_k.x + b_k > tau (the activated side). The boundary belongs to the zero
// side, matching relu(0) = 0.
std::vector<bool> region_signature(const std::vector<Hyperplane>& hs,
                                   const VectorXd& x,
                                   double tau = kDefaultTauAct);

struct ZeroRegionResult {
  bool found = false;
  VectorXd witness;
  double objective = 0.0;  // max_k (w_k.x + b_k) at the witness
  int iterations = 0;
};

// Searches for a point strictly on the zero side of every hyperplane
// (w_k.x + b_k < -tau for all k). Deterministic subgradient descent on the
// max of the signed distances, started from the centroid of the hyperplanes'
// closest points to the origin, with a fixed ladder of target levels.
ZeroRegionResult zero_region_exists(const std::vector<Hyperplane>& hs,
                                    double tau = kDefaultTauAct,
                                    int budget = 4000);

}  // namespace relu_interp
