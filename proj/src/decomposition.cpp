#include "relu_interp/decomposition.hpp"

#include <algorithm>
#include <set>

#include "relu_interp/core_model.hpp"
#include "relu_interp/parallel.hpp"

namespace relu_interp {

namespace {

DecompositionCell fit_cell(const Dataset& data, std::vector<Index> members) {
  const Index n = data.points.front().x.size();
  const Index k = static_cast<Index>(members.size());
  MatrixXd A(k, n + 1);
  VectorXd y(k);
  for (Index r = 0; r < k; ++r) {
    A.row(r).head(n) = data.points[members[r]].x.transpose();
    A(r, n) = 1.0;
    y(r) = data.points[members[r]].y(0);
  }
  VectorXd coeffs = A.completeOrthogonalDecomposition().solve(y);
  DecompositionCell cell;
  cell.members = std::move(members);
  cell.w = coeffs.head(n);
  cell.b = coeffs(n);
  double resid = (A * coeffs - y).norm();
  // a consistent fit is exact by construction; snap solver noise away
  cell.residual =
      resid <= 1e-9 * (1.0 + y.lpNorm<Eigen::Infinity>()) ? 0.0 : resid;
  return cell;
}

Decomposition build_decomposition(const Dataset& data,
                                  std::vector<Hyperplane> cuts,
                                  double tau_act) {
  Decomposition d;
  d.cuts = std::move(cuts);
  std::vector<std::vector<bool>> seen;
  std::vector<std::vector<Index>> groups;
  for (Index k = 0; k < static_cast<Index>(data.points.size()); ++k) {
    std::vector<bool> sig =
        region_signature(d.cuts, data.points[k].x, tau_act);
    auto it = std::find(seen.begin(), seen.end(), sig);
    if (it == seen.end()) {
      seen.push_back(std::move(sig));
      groups.push_back({k});
    } else {
      groups[static_cast<std::size_t>(it - seen.begin())].push_back(k);
    }
  }
  for (auto& g : groups) {
    d.cells.push_back(fit_cell(data, std::move(g)));
    d.total_residual += d.cells.back().residual;
  }
  return d;
}

std::vector<std::vector<Index>> partition_key(const Decomposition& d) {
  std::vector<std::vector<Index>> key;
  for (const auto& c : d.cells) key.push_back(c.members);
  std::sort(key.begin(), key.end());
  return key;
}

}  // namespace

std::vector<Decomposition> explore_decompositions(const Dataset& data,
                                                  const DecompositionOptions& opt) {
  validate_dataset(data);
  if (data.points.front().y.size() != 1)
    throw ValidationError("explore_decompositions: scalar targets only");
  if (opt.samples < 1)
    throw ValidationError("explore_decompositions: samples must be >= 1");
  if (opt.n_cuts < 0)
    throw ValidationError("explore_decompositions: negative cut count");

  const Index n = data.points.front().x.size();
  VectorXd lo = data.points.front().x, hi = data.points.front().x;
  for (const auto& p : data.points) {
    lo = lo.cwiseMin(p.x);
    hi = hi.cwiseMax(p.x);
  }
  for (Index i = 0; i < n; ++i)
    if (hi(i) - lo(i) < 1e-12) {
      lo(i) -= 1.0;
      hi(i) += 1.0;
    }

  // draw every arrangement up front so sample evaluation can run in parallel
  std::mt19937_64 rng(opt.seed);
  std::vector<std::vector<Hyperplane>> arrangements(opt.samples);
  for (auto& arr : arrangements) {
    for (int c = 0; c < opt.n_cuts; ++c) {
      Hyperplane h;
      h.w = VectorXd(n);
      do {
        for (Index i = 0; i < n; ++i) h.w(i) = normal_double(rng);
      } while (h.w.norm() < 1e-6);
      h.w /= h.w.norm();
      VectorXd p(n);
      for (Index i = 0; i < n; ++i) p(i) = uniform_double(rng, lo(i), hi(i));
      h.b = -h.w.dot(p);
      arr.push_back(std::move(h));
    }
  }

  std::vector<Decomposition> sampled(opt.samples);
  parallel_for(opt.samples, [&](Index s) {
    sampled[s] = build_decomposition(data, std::move(arrangements[s]),
                                     opt.tau_act);
  });

  std::vector<Decomposition> out;
  std::set<std::vector<std::vector<Index>>> keys;
  auto push = [&](Decomposition d) {
    if (keys.insert(partition_key(d)).second) out.push_back(std::move(d));
  };
  push(build_decomposition(data, {}, opt.tau_act));
  for (auto& d : sampled) push(std::move(d));

  std::stable_sort(out.begin(), out.end(),
                   [](const Decomposition& a, const Decomposition& b) {
                     if (a.total_residual != b.total_residual)
                       return a.total_residual < b.total_residual;
                     return a.cells.size() < b.cells.size();
                   });
  return out;
}

}  // namespace relu_interp
