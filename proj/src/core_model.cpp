#include "relu_interp/core_model.hpp"

#include <cmath>

namespace relu_interp {

Trace eval_network(const Network& net, const VectorXd& x) {
  validate_network(net);
  if (x.size() != net.input_dim)
    throw ValidationError("eval_network: input has size " + std::to_string(x.size()) +
                          ", network expects " + std::to_string(net.input_dim));
  Trace tr;
  tr.pre.reserve(net.layers.size());
  tr.post.reserve(net.layers.size());
  VectorXd cur = x;
  for (const AffineLayer& l : net.layers) {
    VectorXd z = l.W * cur + l.b;
    tr.pre.push_back(z);
    if (l.act == Activation::Relu)
      cur = z.cwiseMax(0.0);
    else
      cur = z;
    tr.post.push_back(cur);
  }
  return tr;
}

std::vector<bool> region_signature(const std::vector<Hyperplane>& hs,
                                   const VectorXd& x, double tau) {
  std::vector<bool> sig(hs.size());
  for (size_t k = 0; k < hs.size(); ++k) {
    validate_hyperplane(hs[k], "region_signature");
    sig[k] = hs[k].pre(x) > tau;
  }
  return sig;
}

namespace {

double max_pre(const std::vector<Hyperplane>& hs, const VectorXd& x, size_t* argmax) {
  double best = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < hs.size(); ++k) {
    double v = hs[k].pre(x);
    if (v > best) {
      best = v;
      if (argmax) *argmax = k;
    }
  }
  return best;
}

}  // namespace

ZeroRegionResult zero_region_exists(const std::vector<Hyperplane>& hs,
                                    double tau, int budget) {
  if (hs.empty()) throw ValidationError("zero_region_exists: no hyperplanes");
  const Index n = hs.front().w.size();
  std::vector<Hyperplane> unit(hs.size());
  double scale = 1.0;
  for (size_t k = 0; k < hs.size(); ++k) {
    validate_hyperplane(hs[k], "zero_region_exists");
    if (hs[k].w.size() != n)
      throw ValidationError("zero_region_exists: mixed hyperplane dimensions");
    double nrm = hs[k].w.norm();
    unit[k].w = hs[k].w / nrm;
    unit[k].b = hs[k].b / nrm;
    scale = std::max(scale, std::abs(unit[k].b));
  }

  // Start from the centroid of each hyperplane's foot point -b_k w_k / |w_k|^2.
  VectorXd x = VectorXd::Zero(n);
  for (const auto& u : unit) x -= u.b * u.w;
  x /= static_cast<double>(unit.size());

  ZeroRegionResult res;
  res.witness = x;
  res.objective = max_pre(hs, x, nullptr);
  if (res.objective < -tau) {
    res.found = true;
    return res;
  }

  // Fixed ladder of target levels, ambitious first; per level, target-gap
  // subgradient steps on f(x) = max_k normalized pre-activation.
  constexpr int kLevels = 40;
  const int per_level = std::max(24, budget / kLevels);
  int iters = 0;
  double best_obj = res.objective;
  VectorXd best_x = x;
  for (int lv = 0; lv < kLevels && !res.found; ++lv) {
    double offset = scale * std::ldexp(1.0, 5 - lv);  // 32*scale down to ~3e-11*scale
    double target = -(tau + offset);
    for (int it = 0; it < per_level; ++it) {
      size_t k = 0;
      double f = max_pre(unit, x, &k);
      ++iters;
      double raw = max_pre(hs, x, nullptr);
      if (raw < best_obj) {
        best_obj = raw;
        best_x = x;
      }
      if (raw < -tau) {
        res.found = true;
        break;
      }
      x -= (f - target) * unit[k].w;  // unit normal: Polyak step toward target
    }
  }
  res.iterations = iters;
  res.witness = res.found ? x : best_x;
  res.objective = max_pre(hs, res.witness, nullptr);
  res.found = res.objective < -tau;
  return res;
}

}  // namespace relu_interp
