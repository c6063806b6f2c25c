#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace relu_interp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Bad input: wrong shapes, malformed files, violated preconditions.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Well-formed input for which the computation cannot produce a result
// (singular block, exhausted construction budget, ...).
struct ComputeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularBlockError : ComputeError {
  int block_index;
  explicit SingularBlockError(int idx)
      : ComputeError("singular diagonal block " + std::to_string(idx)),
        block_index(idx) {}
};

// Default threshold separating "activated" (pre-activation > tau) from the
// zero side. Pre-activations at or below it are treated as exact zeros.
inline constexpr double kDefaultTauAct = 1e-9;

// Relative singular-value cutoff for rank decisions.
inline constexpr double kDefaultRankTol = 1e-10;

enum class Activation { Relu, Linear };

struct Hyperplane {
  VectorXd w;
  double b = 0.0;

  double pre(const VectorXd& x) const { return w.dot(x) + b; }
};

inline void validate_hyperplane(const Hyperplane& h, const std::string& where) {
  if (h.w.size() == 0 || h.w.norm() == 0.0)
    throw ValidationError(where + ": degenerate hyperplane (zero normal)");
}

struct AffineLayer {
  MatrixXd W;  // units x fan_in
  VectorXd b;  // units
  Activation act = Activation::Relu;

  Index units() const { return W.rows(); }
  Index fan_in() const { return W.cols(); }
};

struct Network {
  int input_dim = 0;
  std::vector<AffineLayer> layers;

  // Layers before the last one; the last is the output layer.
  int hidden_count() const { return static_cast<int>(layers.size()) - 1; }
  int output_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.back().units());
  }
};

inline void validate_network(const Network& net) {
  if (net.input_dim <= 0) throw ValidationError("network: input_dim must be positive");
  if (net.layers.empty()) throw ValidationError("network: needs at least one layer");
  Index in = net.input_dim;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const AffineLayer& l = net.layers[i];
    if (l.W.rows() == 0)
      throw ValidationError("network: layer " + std::to_string(i) + " has no units");
    if (l.W.cols() != in)
      throw ValidationError("network: layer " + std::to_string(i) +
                            " expects fan-in " + std::to_string(l.W.cols()) +
                            ", previous width is " + std::to_string(in));
    if (l.b.size() != l.W.rows())
      throw ValidationError("network: layer " + std::to_string(i) + " bias size mismatch");
    if (i + 1 < net.layers.size() && l.act != Activation::Relu)
      throw ValidationError("network: hidden layer " + std::to_string(i) + " must be relu");
    in = l.W.rows();
  }
}

struct DataPoint {
  VectorXd x;
  VectorXd y;
  int subdomain = 0;  // 0 = unlabeled; labeled points use ids 1..N
};

struct Dataset {
  std::vector<DataPoint> points;

  Index size() const { return static_cast<Index>(points.size()); }
  bool has_subdomains() const {
    for (const auto& p : points)
      if (p.subdomain > 0) return true;
    return false;
  }
};

inline void validate_dataset(const Dataset& d) {
  if (d.points.empty()) throw ValidationError("dataset: empty");
  Index nx = d.points.front().x.size();
  Index ny = d.points.front().y.size();
  for (size_t k = 0; k < d.points.size(); ++k) {
    if (d.points[k].x.size() != nx || d.points[k].y.size() != ny)
      throw ValidationError("dataset: point " + std::to_string(k) + " has inconsistent dimensions");
    if (d.points[k].subdomain < 0)
      throw ValidationError("dataset: point " + std::to_string(k) + " has negative subdomain id");
  }
}

// Subdomain ids must be exactly 1..N with every id present.
inline int subdomain_count(const Dataset& d) {
  int n = 0;
  for (const auto& p : d.points) {
    if (p.subdomain <= 0)
      throw ValidationError("dataset: every point needs a subdomain id >= 1");
    n = std::max(n, p.subdomain);
  }
  std::vector<char> seen(static_cast<size_t>(n) + 1, 0);
  for (const auto& p : d.points) seen[static_cast<size_t>(p.subdomain)] = 1;
  for (int i = 1; i <= n; ++i)
    if (!seen[static_cast<size_t>(i)])
      throw ValidationError("dataset: subdomain ids must be contiguous, missing " + std::to_string(i));
  return n;
}

inline std::vector<Index> subdomain_indices(const Dataset& d, int id) {
  std::vector<Index> out;
  for (Index k = 0; k < d.size(); ++k)
    if (d.points[static_cast<size_t>(k)].subdomain == id) out.push_back(k);
  return out;
}

}  // namespace relu_interp
