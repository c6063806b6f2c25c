#include "relu_interp/routes_sparsity.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "relu_interp/core_model.hpp"

namespace relu_interp {

Route trace_route(const Network& net, const Dataset& data,
                  const std::vector<Index>& subset, double tau_act) {
  validate_network(net);
  validate_dataset(data);
  const int hidden = net.hidden_count();
  if (hidden < 1) throw ValidationError("trace_route: network has no hidden layer");
  Route route;
  route.layer_units.assign(static_cast<size_t>(hidden), {});
  route.source = subset;
  std::vector<std::set<int>> units(static_cast<size_t>(hidden));
  for (Index k : subset) {
    if (k < 0 || k >= data.size())
      throw ValidationError("trace_route: point index out of range");
    Trace tr = eval_network(net, data.points[static_cast<size_t>(k)].x);
    for (int l = 0; l < hidden; ++l) {
      const VectorXd& pre = tr.pre[static_cast<size_t>(l)];
      for (Index u = 0; u < pre.size(); ++u)
        if (pre(u) > tau_act) units[static_cast<size_t>(l)].insert(static_cast<int>(u));
    }
  }
  for (int l = 0; l < hidden; ++l)
    route.layer_units[static_cast<size_t>(l)].assign(units[static_cast<size_t>(l)].begin(),
                                                     units[static_cast<size_t>(l)].end());
  return route;
}

namespace {

VectorXd restrict_to(const VectorXd& v, const std::vector<int>& units) {
  VectorXd out(static_cast<Index>(units.size()));
  for (size_t i = 0; i < units.size(); ++i) out(static_cast<Index>(i)) = v(units[i]);
  return out;
}

bool bitwise_equal(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Index i = 0; i < a.size(); ++i)
    if (a(i) != b(i)) return false;
  return true;
}

}  // namespace

CollapseReport collapse_sets(const Network& net, const Dataset& data, const Route& route,
                             double tau_act) {
  validate_network(net);
  validate_dataset(data);
  const int hidden = net.hidden_count();
  if (static_cast<int>(route.layer_units.size()) != hidden)
    throw ValidationError("collapse_sets: route does not match the network depth");

  std::vector<Trace> traces;
  traces.reserve(static_cast<size_t>(data.size()));
  for (const auto& p : data.points) traces.push_back(eval_network(net, p.x));

  std::set<Index> source(route.source.begin(), route.source.end());

  CollapseReport report;
  report.route = route;
  for (int nu = 0; nu < hidden; ++nu) {
    CollapseSet set;
    set.nu = nu;
    const std::vector<int>& gate = route.layer_units[static_cast<size_t>(nu)];
    for (Index k = 0; k < data.size(); ++k) {
      const VectorXd& pre = traces[static_cast<size_t>(k)].pre[static_cast<size_t>(nu)];
      bool deactivates_all = true;
      for (int u : gate)
        if (pre(u) > tau_act) {
          deactivates_all = false;
          break;
        }
      if (deactivates_all) {
        set.members.push_back(k);
        if (source.count(k)) set.members_in_source.push_back(k);
      }
    }
    if (!set.members.empty()) {
      Index first = set.members.front();
      for (int l = nu; l < hidden; ++l)
        set.trajectory.push_back(restrict_to(traces[static_cast<size_t>(first)].post[static_cast<size_t>(l)],
                                             route.layer_units[static_cast<size_t>(l)]));
      for (Index k : set.members) {
        for (int l = nu; l < hidden && set.trajectories_identical; ++l) {
          VectorXd v = restrict_to(traces[static_cast<size_t>(k)].post[static_cast<size_t>(l)],
                                   route.layer_units[static_cast<size_t>(l)]);
          if (!bitwise_equal(v, set.trajectory[static_cast<size_t>(l - nu)]))
            set.trajectories_identical = false;
        }
        if (!set.trajectories_identical) break;
      }
      const VectorXd& last = set.trajectory.back();
      set.zero_terminal = (last.array() == 0.0).all();
    }
    report.sets.push_back(std::move(set));
  }
  return report;
}

std::map<int, Index> duplicate_rows(const InterpMatrix& m, const CollapseReport& report) {
  if (report.route.layer_units.empty())
    throw ValidationError("duplicate_rows: empty route");
  const std::vector<int>& last_units = report.route.layer_units.back();
  for (int u : last_units)
    if (u < 0 || u >= m.values.cols())
      throw ValidationError("duplicate_rows: route unit out of the matrix's columns");

  std::map<int, Index> counts;
  for (const auto& set : report.sets) {
    if (static_cast<Index>(set.members.size()) < 2) continue;
    Index first = set.members.front();
    for (Index k : set.members)
      for (int u : last_units)
        if (m.values(k, u) != m.values(first, u))
          throw ComputeError("duplicate_rows: rows of a collapse set differ at level " +
                             std::to_string(set.nu));
    counts[set.nu] = static_cast<Index>(set.members.size());
  }
  return counts;
}

std::vector<LayerSparsity> layerwise_sparsity(const Network& net, const Dataset& data,
                                              double tau_act) {
  validate_network(net);
  validate_dataset(data);
  std::vector<LayerSparsity> out;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    if (net.layers[l].act != Activation::Relu) continue;
    InterpMatrix m = build_interp_matrix(net, data, static_cast<int>(l), tau_act);
    out.push_back(LayerSparsity{static_cast<int>(l) + 1, sparsity(m.values)});
  }
  return out;
}

NetworkSplit decompose_network(const Network& net) {
  validate_network(net);
  if (net.hidden_count() < 2)
    throw ValidationError("decompose_network: needs at least two hidden layers");
  NetworkSplit split;
  split.front.input_dim = net.input_dim;
  for (int l = 0; l + 2 < static_cast<int>(net.layers.size()); ++l)
    split.front.layers.push_back(net.layers[static_cast<size_t>(l)]);
  split.back.input_dim = static_cast<int>(split.front.layers.back().units());
  split.back.layers.push_back(net.layers[net.layers.size() - 2]);
  split.back.layers.push_back(net.layers.back());
  return split;
}

RegionPartition region_partition(const Network& net, const Dataset& data, double tau_act) {
  validate_network(net);
  validate_dataset(data);
  if (net.hidden_count() < 1)
    throw ValidationError("region_partition: network has no hidden layer");
  const size_t last = static_cast<size_t>(net.hidden_count() - 1);
  RegionPartition part;
  for (Index k = 0; k < data.size(); ++k) {
    Trace tr = eval_network(net, data.points[static_cast<size_t>(k)].x);
    const VectorXd& pre = tr.pre[last];
    std::vector<bool> sig(static_cast<size_t>(pre.size()));
    for (Index u = 0; u < pre.size(); ++u) sig[static_cast<size_t>(u)] = pre(u) > tau_act;
    bool found = false;
    for (size_t g = 0; g < part.signatures.size(); ++g)
      if (part.signatures[g] == sig) {
        part.groups[g].push_back(k);
        found = true;
        break;
      }
    if (!found) {
      part.signatures.push_back(std::move(sig));
      part.groups.push_back({k});
    }
  }
  return part;
}

BijectivityReport bijectivity_check(const Network& net, const Dataset& data) {
  validate_network(net);
  validate_dataset(data);
  BijectivityReport rep;
  rep.collision_groups.resize(net.layers.size());
  std::vector<Trace> traces;
  for (const auto& p : data.points) traces.push_back(eval_network(net, p.x));
  for (size_t l = 0; l < net.layers.size(); ++l) {
    std::map<std::vector<double>, std::vector<Index>> buckets;
    for (Index k = 0; k < data.size(); ++k) {
      const VectorXd& v = traces[static_cast<size_t>(k)].post[l];
      std::vector<double> key(v.data(), v.data() + v.size());
      buckets[key].push_back(k);
    }
    for (auto& [key, pts] : buckets)
      if (pts.size() >= 2) {
        rep.collision_groups[l].push_back(pts);
        rep.injective = false;
      }
  }
  return rep;
}

namespace {

// Plain perceptron on (rows, +-1 labels); true when a separating hyperplane
// is found within the epoch budget.
bool perceptron_separable(const MatrixXd& rows, const std::vector<int>& labels,
                          int epochs) {
  VectorXd w = VectorXd::Zero(rows.cols());
  double b = 0.0;
  for (int e = 0; e < epochs; ++e) {
    bool clean = true;
    for (Index k = 0; k < rows.rows(); ++k) {
      double margin = labels[static_cast<size_t>(k)] * (rows.row(k).dot(w) + b);
      if (margin <= 0.0) {
        w += labels[static_cast<size_t>(k)] * rows.row(k).transpose();
        b += labels[static_cast<size_t>(k)];
        clean = false;
      }
    }
    if (clean) return true;
  }
  return false;
}

}  // namespace

DisentangleVerdict disentangle_check(const MatrixXd& code,
                                     const std::vector<int>& categories,
                                     int perceptron_epochs) {
  if (static_cast<Index>(categories.size()) != code.rows())
    throw ValidationError("disentangle_check: one category per code row required");
  if (code.rows() == 0) throw ValidationError("disentangle_check: empty code matrix");

  DisentangleVerdict v;
  std::map<int, std::vector<Index>> rows_of;
  for (Index k = 0; k < code.rows(); ++k) rows_of[categories[static_cast<size_t>(k)]].push_back(k);
  if (rows_of.size() < 2)
    throw ValidationError("disentangle_check: need at least two categories");

  std::map<Index, std::set<int>> users;  // column -> categories activating it
  for (auto& [cat, rows] : rows_of) {
    std::vector<Index> cols;
    for (Index c = 0; c < code.cols(); ++c) {
      bool active = false;
      for (Index k : rows)
        if (code(k, c) > 0.0) {
          active = true;
          break;
        }
      if (active) {
        cols.push_back(c);
        users[c].insert(cat);
      }
    }
    v.activated[cat] = std::move(cols);
  }
  for (Index k = 0; k < code.rows(); ++k)
    if (!(code.row(k).array() > 0.0).any()) v.zero_rows.push_back(k);
  for (auto& [c, cats] : users)
    if (cats.size() >= 2) v.shared_columns.push_back(c);

  bool all_nonempty = true;
  for (auto& [cat, cols] : v.activated)
    if (cols.empty()) all_nonempty = false;
  v.disentangled = v.shared_columns.empty() && all_nonempty && v.zero_rows.empty();

  std::vector<char> placed(static_cast<size_t>(code.cols()), 0);
  for (auto& [cat, cols] : v.activated)
    for (Index c : cols)
      if (!placed[static_cast<size_t>(c)]) {
        v.column_permutation.push_back(c);
        placed[static_cast<size_t>(c)] = 1;
      }
  for (Index c = 0; c < code.cols(); ++c)
    if (!placed[static_cast<size_t>(c)]) {
      v.column_permutation.push_back(c);
      v.unused_columns.push_back(c);
    }

  if (!v.disentangled) {
    bool all_separable = true;
    for (auto& [cat, rows] : rows_of) {
      (void)rows;
      std::vector<int> labels(static_cast<size_t>(code.rows()));
      for (Index k = 0; k < code.rows(); ++k)
        labels[static_cast<size_t>(k)] = categories[static_cast<size_t>(k)] == cat ? 1 : -1;
      if (!perceptron_separable(code, labels, perceptron_epochs)) {
        all_separable = false;
        break;
      }
    }
    v.separable_but_entangled = all_separable;
  }
  return v;
}

}  // namespace relu_interp
