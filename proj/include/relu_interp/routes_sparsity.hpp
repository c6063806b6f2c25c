#pragma once

#include "relu_interp/interp_matrix.hpp"

namespace relu_interp {

// Units of each hidden layer activated by at least one point of `source`
// (pre-activation > tau). Subnetworks of non-overlapping routes act as
// independent channels.
struct Route {
  std::vector<std::vector<int>> layer_units;  // per hidden layer, ascending
  std::vector<Index> source;                  // point indices the route covers
};

Route trace_route(const Network& net, const Dataset& data,
                  const std::vector<Index>& subset, double tau_act = kDefaultTauAct);

// E_nu = points whose layer-nu image deactivates every route unit of layer
// nu+1. All of them share one trajectory through the route from there on.
struct CollapseSet {
  int nu = 0;                        // mapped level: 0 = raw inputs
  std::vector<Index> members;        // over the whole dataset
  std::vector<Index> members_in_source;
  std::vector<VectorXd> trajectory;  // route-restricted outputs, layers nu+1..d
  bool trajectories_identical = true;
  bool zero_terminal = false;        // last trajectory vector exactly zero
};

struct CollapseReport {
  Route route;
  std::vector<CollapseSet> sets;  // one per nu = 0..d-1
};

CollapseReport collapse_sets(const Network& net, const Dataset& data, const Route& route,
                             double tau_act = kDefaultTauAct);

// For every collapse set with >= 2 members, verifies the members' rows of the
// route-restricted last-hidden matrix are bitwise identical and returns the
// count per nu. A mismatch is an invariant violation (ComputeError).
std::map<int, Index> duplicate_rows(const InterpMatrix& m, const CollapseReport& report);

struct LayerSparsity {
  int layer = 0;  // 1-based depth
  double value = 0.0;
};

// Zero fraction of each relu layer's output matrix over the dataset.
std::vector<LayerSparsity> layerwise_sparsity(const Network& net, const Dataset& data,
                                              double tau_act = kDefaultTauAct);

struct NetworkSplit {
  Network front;  // hidden layers 1..d-1
  Network back;   // last hidden layer + output layer
};

// Re-associates a deep network as back(front(x)); needs >= 2 hidden layers.
NetworkSplit decompose_network(const Network& net);

struct RegionPartition {
  std::vector<std::vector<bool>> signatures;  // per group
  std::vector<std::vector<Index>> groups;     // point indices, by first appearance
};

// Groups points by their last-hidden-layer activation signature.
RegionPartition region_partition(const Network& net, const Dataset& data,
                                 double tau_act = kDefaultTauAct);

struct BijectivityReport {
  // collision_groups[layer] lists groups of >= 2 points with bitwise-identical
  // outputs at that layer.
  std::vector<std::vector<std::vector<Index>>> collision_groups;
  bool injective = true;
};

BijectivityReport bijectivity_check(const Network& net, const Dataset& data);

struct DisentangleVerdict {
  bool disentangled = false;
  std::vector<Index> column_permutation;  // category blocks then unused columns
  std::map<int, std::vector<Index>> activated;  // category -> activated columns
  std::vector<Index> shared_columns;            // activated by >= 2 categories
  std::vector<Index> zero_rows;                 // points activating nothing
  std::vector<Index> unused_columns;
  bool separable_but_entangled = false;  // per-category linear separability anyway
};

// Disentangled iff per-category activated-column sets are pairwise disjoint,
// every category activates something, and no point has an all-zero code row.
// categories[k] = category id of point k (ids need not be contiguous).
DisentangleVerdict disentangle_check(const MatrixXd& code,
                                     const std::vector<int>& categories,
                                     int perceptron_epochs = 10000);

}  // namespace relu_interp
