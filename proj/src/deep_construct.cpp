#include "relu_interp/deep_construct.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace relu_interp {

ConvexPolytope make_polytope(std::vector<Hyperplane> faces, double tau_act) {
  if (faces.empty()) throw ValidationError("polytope: needs at least one face");
  const Index n = faces.front().w.size();
  for (const auto& f : faces) {
    validate_hyperplane(f, "polytope");
    if (f.w.size() != n) throw ValidationError("polytope: mixed face dimensions");
  }
  // Interior = common strictly-positive side; search it as the zero region of
  // the flipped faces.
  std::vector<Hyperplane> flipped;
  flipped.reserve(faces.size());
  for (const auto& f : faces) flipped.push_back(Hyperplane{-f.w, -f.b});
  ZeroRegionResult zr = zero_region_exists(flipped, tau_act);
  if (!zr.found)
    throw ValidationError("polytope: no interior point found (empty interior?)");
  ConvexPolytope poly;
  poly.maybe_unbounded = static_cast<Index>(faces.size()) < n + 1;
  poly.interior_witness = zr.witness;
  poly.faces = std::move(faces);
  return poly;
}

CollapseLayer build_collapse_layer(const Hyperplane& leading, const VectorXd& anchor,
                                   const std::vector<VectorXd>& transmit,
                                   const std::vector<VectorXd>& collapse,
                                   double tau_act) {
  validate_hyperplane(leading, "collapse layer");
  const Index n = leading.w.size();
  if (anchor.size() != n) throw ValidationError("collapse layer: anchor dimension mismatch");
  if (std::abs(leading.pre(anchor)) > 1e-6 * (1.0 + anchor.norm()) * (1.0 + leading.w.norm()))
    throw ValidationError("collapse layer: anchor must lie on the leading hyperplane");
  for (const auto& x : transmit)
    if (leading.pre(x) <= tau_act)
      throw ValidationError("collapse layer: transmit point is not strictly positive");
  for (const auto& x : collapse)
    if (leading.pre(x) > 0.0)
      throw ComputeError("collapse layer: cannot collapse a point with positive pre-activation");

  int pivot = 0;
  leading.w.cwiseAbs().maxCoeff(&pivot);

  std::vector<double> eps(static_cast<size_t>(n > 1 ? n - 1 : 0));
  for (size_t j = 0; j < eps.size(); ++j)
    eps[j] = 0.5 * static_cast<double>(j + 1) / static_cast<double>(n);

  for (int halve = 0; halve <= 60; ++halve) {
    CollapseLayer layer;
    layer.W.resize(n, n);
    layer.W.row(0) = leading.w.transpose();
    for (Index i = 1; i < n; ++i) {
      VectorXd row = leading.w;
      size_t j = 0;
      for (Index c = 0; c < n; ++c) {
        if (c == pivot) continue;
        row(c) += std::pow(eps[j], static_cast<double>(i));
        ++j;
      }
      layer.W.row(i) = row.transpose();
    }
    layer.b = -(layer.W * anchor);
    layer.anchor = anchor;
    layer.epsilons = eps;
    layer.pivot = pivot;

    const VectorXd* bad = nullptr;
    for (const auto& x : transmit) {
      VectorXd pre = layer.W * x + layer.b;
      if (!(pre.array() > tau_act).all()) {
        bad = &x;
        break;
      }
    }
    if (!bad)
      for (const auto& x : collapse) {
        VectorXd pre = layer.W * x + layer.b;
        if ((pre.array() > 0.0).any()) {
          bad = &x;
          break;
        }
      }
    if (!bad) return layer;
    for (double& e : eps) e *= 0.5;
  }
  throw ComputeError("collapse layer: no tilt magnitude preserves the two-sided split");
}

Hyperplane pullback_hyperplane(const CollapseLayer& layer, const Hyperplane& h) {
  validate_hyperplane(h, "pullback");
  if (h.w.size() != layer.W.cols())
    throw ValidationError("pullback: dimension mismatch");
  VectorXd v2 = layer.W.transpose().partialPivLu().solve(h.w);
  return Hyperplane{v2, h.b - v2.dot(layer.b)};
}

TransmissionReport verify_affine_transmission(
    const CollapseLayer& layer, const std::vector<VectorXd>& points,
    const std::vector<std::pair<Hyperplane, Hyperplane>>& pairs, double tol) {
  TransmissionReport rep;
  for (size_t k = 0; k < points.size(); ++k) {
    VectorXd pre = layer.W * points[k] + layer.b;
    if (!(pre.array() > 0.0).all()) {
      rep.non_transmitted.push_back(static_cast<Index>(k));
      rep.pass = false;
      continue;
    }
    VectorXd mapped = pre;  // relu is the identity here
    for (const auto& [orig, xform] : pairs) {
      double a = std::max(0.0, orig.pre(points[k]));
      double b = std::max(0.0, xform.pre(mapped));
      rep.max_deviation = std::max(rep.max_deviation, std::abs(a - b));
    }
  }
  if (rep.max_deviation > tol) rep.pass = false;
  return rep;
}

namespace {

struct OrderAttempt {
  Network net;
  std::vector<CollapseLayer> layers;
};

// Anchor on `face` whose image (the new origin) lies strictly outside `next`.
// Candidates start at the data centroid's projection onto the face and walk
// along the in-face direction that decreases the next face's pre-activation.
bool find_anchor(const Hyperplane& face, const Hyperplane* next, const VectorXd& centroid,
                 double margin, const std::vector<VectorXd>& transmit,
                 const std::vector<VectorXd>& collapse, double tau_act,
                 CollapseLayer* out) {
  const VectorXd g = face.w / face.w.squaredNorm();
  VectorXd foot = centroid - face.pre(centroid) * g;

  std::vector<VectorXd> candidates;
  if (!next) {
    candidates.push_back(foot);
  } else {
    VectorXd ghat = face.w.normalized();
    VectorXd dir = -(next->w - next->w.dot(ghat) * ghat);
    double dn = dir.norm();
    if (dn < 1e-12 * (1.0 + next->w.norm())) {
      // Parallel faces: no in-face direction changes the next pre-activation.
      if (next->pre(foot) <= -margin) candidates.push_back(foot);
    } else {
      dir /= dn;
      double scale = 1.0 + foot.norm();
      for (int i = 0; i < 28; ++i) {
        VectorXd cand = foot + dir * (scale * std::ldexp(1.0, i - 4));
        if (next->pre(cand) <= -margin) candidates.push_back(cand);
        if (candidates.size() >= 12) break;
      }
    }
  }

  for (const auto& cand : candidates) {
    try {
      *out = build_collapse_layer(face, cand, transmit, collapse, tau_act);
      return true;
    } catch (const ComputeError&) {
    } catch (const ValidationError&) {
    }
  }
  return false;
}

bool try_order(const ConvexPolytope& poly, const std::vector<int>& order,
               const std::vector<VectorXd>& inside, const std::vector<VectorXd>& outside,
               double tau_act, OrderAttempt* out) {
  const int d = static_cast<int>(poly.faces.size());
  const Index n = poly.faces.front().w.size();

  std::vector<Hyperplane> faces = poly.faces;  // rewritten into current coordinates
  std::vector<VectorXd> stars = inside;
  std::vector<VectorXd> os = outside;
  std::vector<char> collapsed(os.size(), 0);
  bool has_cluster = false;

  out->layers.clear();
  out->net = Network{};
  out->net.input_dim = static_cast<int>(n);

  for (int k = 0; k + 1 < d; ++k) {
    const Hyperplane& face = faces[static_cast<size_t>(order[static_cast<size_t>(k)])];
    const Hyperplane& next_face = faces[static_cast<size_t>(order[static_cast<size_t>(k + 1)])];

    std::vector<VectorXd> transmit = stars;
    std::vector<VectorXd> collapse;
    std::vector<size_t> collapsing_now;
    for (size_t i = 0; i < os.size(); ++i) {
      if (collapsed[i]) continue;
      if (face.pre(os[i]) > tau_act)
        transmit.push_back(os[i]);
      else {
        collapse.push_back(os[i]);
        collapsing_now.push_back(i);
      }
    }
    if (has_cluster) collapse.push_back(VectorXd::Zero(n));

    VectorXd centroid = VectorXd::Zero(n);
    for (const auto& x : stars) centroid += x;
    if (!stars.empty()) centroid /= static_cast<double>(stars.size());

    bool steer = has_cluster || !collapse.empty();
    double margin = std::max(1e-6, 1024.0 * tau_act);
    CollapseLayer layer;
    if (!find_anchor(face, steer ? &next_face : nullptr, centroid, margin, transmit,
                     collapse, tau_act, &layer))
      return false;

    // Advance every tracked object into the layer's output coordinates.
    for (auto& x : stars) x = (layer.W * x + layer.b).cwiseMax(0.0);
    for (size_t i = 0; i < os.size(); ++i) {
      if (collapsed[i]) continue;
      os[i] = (layer.W * os[i] + layer.b).cwiseMax(0.0);
    }
    for (size_t i : collapsing_now) collapsed[i] = 1;
    if (!collapse.empty()) has_cluster = true;
    for (int j = k + 1; j < d; ++j) {
      int f = order[static_cast<size_t>(j)];
      faces[static_cast<size_t>(f)] = pullback_hyperplane(layer, faces[static_cast<size_t>(f)]);
    }

    AffineLayer al;
    al.W = layer.W;
    al.b = layer.b;
    al.act = Activation::Relu;
    out->net.layers.push_back(al);
    out->layers.push_back(layer);
  }

  const Hyperplane& last = faces[static_cast<size_t>(order[static_cast<size_t>(d - 1)])];
  AffineLayer fin;
  fin.W = last.w.transpose();
  fin.b = VectorXd::Constant(1, last.b);
  fin.act = Activation::Relu;
  out->net.layers.push_back(fin);

  for (const auto& x : inside)
    if (!classify(out->net, x, tau_act)) return false;
  for (const auto& x : outside)
    if (classify(out->net, x, tau_act)) return false;
  return true;
}

}  // namespace

ClassifierBuild build_polytope_classifier(const ConvexPolytope& poly,
                                          const std::vector<VectorXd>& inside,
                                          const std::vector<VectorXd>& outside,
                                          double tau_act) {
  if (poly.faces.empty()) throw ValidationError("classifier: polytope has no faces");
  const Index n = poly.faces.front().w.size();
  for (const auto& x : inside) {
    if (x.size() != n) throw ValidationError("classifier: point dimension mismatch");
    for (size_t f = 0; f < poly.faces.size(); ++f)
      if (poly.faces[f].pre(x) <= tau_act)
        throw ValidationError("classifier: an inside point is not strictly inside face " +
                              std::to_string(f));
  }
  for (const auto& x : outside) {
    if (x.size() != n) throw ValidationError("classifier: point dimension mismatch");
    bool strictly_out = false;
    for (const auto& f : poly.faces)
      if (f.pre(x) < -tau_act) {
        strictly_out = true;
        break;
      }
    if (!strictly_out)
      throw ValidationError("classifier: an outside point is not strictly outside any face");
  }

  const int d = static_cast<int>(poly.faces.size());
  std::vector<std::vector<int>> orders;
  std::vector<int> input_order(static_cast<size_t>(d));
  std::iota(input_order.begin(), input_order.end(), 0);
  orders.push_back(input_order);
  if (d >= 2 && d <= 6) {
    std::vector<int> perm = input_order;
    while (std::next_permutation(perm.begin(), perm.end())) orders.push_back(perm);
  }

  for (const auto& order : orders) {
    OrderAttempt attempt;
    if (try_order(poly, order, inside, outside, tau_act, &attempt)) {
      ClassifierBuild build;
      build.net = std::move(attempt.net);
      build.layers = std::move(attempt.layers);
      build.face_order = order;
      build.total = static_cast<int>(inside.size() + outside.size());
      build.separated = build.total;  // try_order validated every point
      return build;
    }
  }
  throw ComputeError("classifier: no face ordering realizes the separation");
}

bool classify(const Network& net, const VectorXd& x, double tau_act) {
  Trace tr = eval_network(net, x);
  const VectorXd& pre = tr.pre.back();
  if (pre.size() != 1)
    throw ValidationError("classify: network must end in a single unit");
  return pre(0) > tau_act;
}

}  // namespace relu_interp
