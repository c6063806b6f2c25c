#include "relu_interp/trainer.hpp"

#include <cmath>

#include "relu_interp/core_model.hpp"
#include "relu_interp/interp_matrix.hpp"
#include "relu_interp/parallel.hpp"

namespace relu_interp {

double quadratic_loss(const Network& net, const Dataset& data) {
  double acc = 0.0;
  for (const auto& p : data.points) {
    Trace t = eval_network(net, p.x);
    acc += (t.output() - p.y).squaredNorm();
  }
  return acc / static_cast<double>(data.points.size());
}

std::map<int, int> region_occupancy(const Network& net, const Dataset& data,
                                    double tau_act) {
  const int last_hidden = static_cast<int>(net.layers.size()) - 2;
  std::map<int, std::set<std::vector<bool>>> sigs;
  for (const auto& p : data.points) {
    Trace t = eval_network(net, p.x);
    const VectorXd& pre = last_hidden >= 0 ? t.pre[last_hidden] : t.pre.back();
    std::vector<bool> sig(pre.size());
    for (Index u = 0; u < pre.size(); ++u) sig[u] = pre(u) > tau_act;
    sigs[p.subdomain].insert(std::move(sig));
  }
  std::map<int, int> out;
  for (const auto& [id, s] : sigs) out[id] = static_cast<int>(s.size());
  return out;
}

namespace {

void reinit_layers(Network& net, const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.fan_in()));
    if (cfg.freeze.count(static_cast<int>(l))) {
      // keep the draw sequence aligned so freezing does not shift other layers
      for (Index i = 0; i < layer.W.size() + layer.b.size(); ++i) rng();
      continue;
    }
    for (Index r = 0; r < layer.W.rows(); ++r)
      for (Index c = 0; c < layer.W.cols(); ++c)
        layer.W(r, c) = uniform_double(rng, -1.0, 1.0) * scale;
    for (Index r = 0; r < layer.b.size(); ++r)
      layer.b(r) = uniform_double(rng, -1.0, 1.0) * scale;
  }
}

struct Grads {
  std::vector<MatrixXd> W;
  std::vector<VectorXd> b;
};

// Full-batch gradient of the mean squared error. Relu subgradient at 0 is 0.
Grads batch_gradients(const Network& net, const Dataset& data, double* loss_out) {
  const std::size_t L = net.layers.size();
  Grads g;
  g.W.resize(L);
  g.b.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    g.W[l] = MatrixXd::Zero(net.layers[l].W.rows(), net.layers[l].W.cols());
    g.b[l] = VectorXd::Zero(net.layers[l].b.size());
  }
  const double C = static_cast<double>(data.points.size());
  double loss = 0.0;
  for (const auto& p : data.points) {
    Trace t = eval_network(net, p.x);
    loss += (t.output() - p.y).squaredNorm();
    VectorXd delta = (2.0 / C) * (t.output() - p.y);
    for (int l = static_cast<int>(L) - 1; l >= 0; --l) {
      if (net.layers[l].act == Activation::Relu)
        delta = (t.pre[l].array() > 0.0).select(delta, 0.0);
      const VectorXd& input = l == 0 ? p.x : t.post[l - 1];
      g.W[l].noalias() += delta * input.transpose();
      g.b[l] += delta;
      if (l > 0) delta = net.layers[l].W.transpose() * delta;
    }
  }
  if (loss_out) *loss_out = loss / C;
  return g;
}

}  // namespace

TrainTrace train_full_batch(Network net, const Dataset& data, const TrainConfig& cfg) {
  validate_network(net);
  validate_dataset(data);
  if (data.points.front().x.size() != net.input_dim ||
      data.points.front().y.size() != net.output_dim())
    throw ValidationError("train_full_batch: data does not match network dimensions");
  if (cfg.lr <= 0.0) throw ValidationError("train_full_batch: lr must be positive");
  if (cfg.steps < 0) throw ValidationError("train_full_batch: negative step count");
  if (cfg.record_every < 1)
    throw ValidationError("train_full_batch: record_every must be >= 1");
  for (int f : cfg.freeze)
    if (f < 0 || f >= static_cast<int>(net.layers.size()))
      throw ValidationError("train_full_batch: freeze index out of range");
  if (cfg.reinit) reinit_layers(net, cfg);

  TrainTrace trace;
  bool labeled = false;
  for (const auto& p : data.points) labeled = labeled || p.subdomain != 0;
  auto record = [&](int step, double loss) {
    trace.step.push_back(step);
    trace.loss.push_back(loss);
    trace.occupancy.push_back(labeled ? region_occupancy(net, data)
                                      : std::map<int, int>{});
  };

  for (int s = 0; s < cfg.steps; ++s) {
    double loss = 0.0;
    Grads g = batch_gradients(net, data, &loss);
    if (!std::isfinite(loss) || loss > cfg.divergence_threshold) {
      trace.diverged = true;
      record(s, loss);
      trace.final_net = std::move(net);
      return trace;
    }
    if (s % cfg.record_every == 0) record(s, loss);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      if (cfg.freeze.count(static_cast<int>(l))) continue;
      net.layers[l].W -= cfg.lr * g.W[l];
      net.layers[l].b -= cfg.lr * g.b[l];
    }
  }
  record(cfg.steps, quadratic_loss(net, data));
  trace.final_net = std::move(net);
  return trace;
}

namespace {

// Tries to solve the output layer exactly against the current last-hidden
// matrix. On success writes the weights (bias zeroed) and reports the method.
bool space_pass(Network& net, const Dataset& data, const SpacetimeConfig& cfg,
                SpacetimeResult& res) {
  InterpMatrix phi = build_interp_matrix(net, data);
  const Index C = phi.values.rows();
  const Index m = phi.values.cols();
  VectorXd y(C);
  for (Index k = 0; k < C; ++k) y(k) = data.points[phi.row_meta[k].point].y(0);

  VectorXd alpha;
  std::string method;
  if (m >= C) {
    OverparamOptions opt = cfg.overparam;
    opt.stop_at_first = true;
    OverparamResult r = solve_overparam(phi.values, y, opt);
    if (!r.solutions.empty()) {
      alpha = r.solutions.front().alpha;
      method = "overparam";
    }
  }
  if (method.empty()) {
    FitResult fit = fit_output_layer(phi.values, y);
    alpha = fit.alpha;
    method = "fit";
  }
  double resid = (phi.values * alpha - y).lpNorm<Eigen::Infinity>();
  if (resid <= cfg.accept_tol) {
    auto& out = net.layers.back();
    out.W = alpha.transpose();
    out.b.setZero();
    res.solved = true;
    res.residual = resid;
    res.method = method;
    return true;
  }
  return false;
}

}  // namespace

SpacetimeResult spacetime_search(Network net, const Dataset& data,
                                 const SpacetimeConfig& cfg) {
  validate_network(net);
  validate_dataset(data);
  if (net.output_dim() != 1)
    throw ValidationError("spacetime_search: scalar targets only");
  if (net.layers.back().act != Activation::Linear)
    throw ValidationError("spacetime_search: output layer must be linear");
  if (cfg.max_blocks < 0)
    throw ValidationError("spacetime_search: negative block budget");

  SpacetimeResult res;
  if (space_pass(net, data, cfg, res)) {
    res.net = std::move(net);
    return res;
  }
  TrainConfig tc = cfg.train;
  tc.freeze.insert(static_cast<int>(net.layers.size()) - 1);
  for (int block = 1; block <= cfg.max_blocks; ++block) {
    TrainTrace t = train_full_batch(std::move(net), data, tc);
    net = std::move(t.final_net);
    res.blocks_used = block;
    if (t.diverged) break;
    if (space_pass(net, data, cfg, res)) break;
  }
  res.net = std::move(net);
  return res;
}

}  // namespace relu_interp
