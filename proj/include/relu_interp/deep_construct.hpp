#pragma once

#include "relu_interp/core_model.hpp"

namespace relu_interp {

struct ConvexPolytope {
  std::vector<Hyperplane> faces;  // oriented inward: interior has w.x + b > 0
  bool maybe_unbounded = false;   // fewer than n+1 faces
  VectorXd interior_witness;
};

// Validates every face and checks the interior is nonempty (witness found).
ConvexPolytope make_polytope(std::vector<Hyperplane> faces,
                             double tau_act = kDefaultTauAct);

// One relu layer whose rows all pass through a common anchor on the leading
// hyperplane: points on the positive side are transmitted affinely, points on
// the zero side of every row collapse to the exact zero vector.
struct CollapseLayer {
  MatrixXd W;
  VectorXd b;  // exactly -W * anchor
  VectorXd anchor;
  std::vector<double> epsilons;  // tilt magnitudes actually used
  int pivot = 0;                 // untouched coordinate
};

// transmit: points that must keep all rows positive (pre > tau_act).
// collapse: points that must end on the zero side of all rows (pre <= 0).
// Tilts start at eps_j = j / (2n) and are halved together until both sets
// validate; throws ComputeError naming the first stuck point otherwise.
CollapseLayer build_collapse_layer(const Hyperplane& leading, const VectorXd& anchor,
                                   const std::vector<VectorXd>& transmit,
                                   const std::vector<VectorXd>& collapse,
                                   double tau_act = kDefaultTauAct);

// Hyperplane h in the layer's input coordinates, rewritten for the layer's
// output coordinates: v'.(Wx + b) + c' == v.x + c for all x.
Hyperplane pullback_hyperplane(const CollapseLayer& layer, const Hyperplane& h);

struct TransmissionReport {
  bool pass = true;
  double max_deviation = 0.0;            // worst |pre(orig) - pre(mapped)|
  std::vector<Index> non_transmitted;    // points with a nonpositive row
};

// Checks sigma(v.x + c) == sigma(v'.x' + c') within tol for each transmitted
// point and each (original, pulled-back) hyperplane pair.
TransmissionReport verify_affine_transmission(
    const CollapseLayer& layer, const std::vector<VectorXd>& points,
    const std::vector<std::pair<Hyperplane, Hyperplane>>& pairs,
    double tol = 1e-9);

struct ClassifierBuild {
  Network net;
  std::vector<int> face_order;            // processing order of the faces
  std::vector<CollapseLayer> layers;      // one per face except the last
  int separated = 0;                      // points classified correctly
  int total = 0;
};

// Builds a relu network separating the inside points from the outside points
// of a convex polytope: one collapse layer per face (outside points collapse
// to a single point steered onto the next face's zero side) and a final
// single-unit relu whose pre-activation sign decides. Face orderings are
// tried starting from input order; all permutations for up to 6 faces.
ClassifierBuild build_polytope_classifier(const ConvexPolytope& poly,
                                          const std::vector<VectorXd>& inside,
                                          const std::vector<VectorXd>& outside,
                                          double tau_act = kDefaultTauAct);

// True when the final unit's pre-activation exceeds tau_act.
bool classify(const Network& net, const VectorXd& x, double tau_act = kDefaultTauAct);

}  // namespace relu_interp
