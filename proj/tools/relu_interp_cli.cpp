#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "relu_interp/core_model.hpp"
#include "relu_interp/decomposition.hpp"
#include "relu_interp/deep_construct.hpp"
#include "relu_interp/io.hpp"
#include "relu_interp/routes_sparsity.hpp"
#include "relu_interp/solvers.hpp"
#include "relu_interp/trainer.hpp"

using namespace relu_interp;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

MatrixXd dense_from_file(const std::string& path) {
  if (has_suffix(path, ".json")) {
    njson j = load_json_file(path);
    if (j.is_object() && j.contains("rows") && j.contains("cols"))
      return matrix_from_json(j).values;
    if (j.is_object() && j.contains("values")) return dense_from_json(j["values"], path);
    return dense_from_json(j, path);
  }
  return matrix_from_csv(read_text(path));
}

VectorXd vector_from_file(const std::string& path) {
  if (has_suffix(path, ".json")) {
    njson j = load_json_file(path);
    if (j.is_object() && j.contains("values")) return vector_from_json(j["values"], path);
    return vector_from_json(j, path);
  }
  MatrixXd m = matrix_from_csv(read_text(path));
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  throw ValidationError(path + ": expected a single row or column of numbers");
}

template <typename T>
std::vector<T> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(static_cast<T>(std::stoll(item)));
    } catch (const std::exception&) {
      throw ValidationError(what + ": cannot parse \"" + item + "\"");
    }
  }
  return out;
}

std::map<Index, double> parse_free_values(const std::string& text) {
  std::map<Index, double> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ValidationError("--free: expected ix=value, got \"" + item + "\"");
    try {
      out[static_cast<Index>(std::stoll(item.substr(0, eq)))] =
          std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("--free: cannot parse \"" + item + "\"");
    }
  }
  return out;
}

void write_out(const std::string& path, const njson& j) {
  if (!path.empty()) save_text_file(path, j.dump(2) + "\n");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

njson route_to_json(const Route& r) {
  njson j;
  j["layer_units"] = r.layer_units;
  njson src = njson::array();
  for (Index k : r.source) src.push_back(k);
  j["source"] = std::move(src);
  return j;
}

// Rows grouped by the subdomain ids carried in the matrix metadata; a single
// group when the rows are unlabeled.
std::vector<std::vector<Index>> rows_by_subdomain(const InterpMatrix& m) {
  int max_id = 0;
  bool labeled = true;
  for (const auto& r : m.row_meta) {
    if (r.subdomain <= 0) labeled = false;
    max_id = std::max(max_id, r.subdomain);
  }
  std::vector<std::vector<Index>> parts;
  if (!labeled) {
    parts.emplace_back();
    for (Index k = 0; k < static_cast<Index>(m.row_meta.size()); ++k)
      parts.back().push_back(k);
    return parts;
  }
  parts.resize(max_id);
  for (Index k = 0; k < static_cast<Index>(m.row_meta.size()); ++k)
    parts[m.row_meta[k].subdomain - 1].push_back(k);
  for (int i = 0; i < max_id; ++i)
    if (parts[i].empty())
      throw ValidationError("matrix.rows: subdomain ids must be contiguous, missing " +
                            std::to_string(i + 1));
  return parts;
}

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relu-interp: interpolation-matrix toolkit for relu networks"};
  app.require_subcommand(1);
  int rc = 0;

  struct {
    std::string network, data, matrix, polytope, mode, code, rhs, targets;
    std::string out, net_out, format = "csv", report_format = "json";
    std::string subset, freeze, free_values, blocks, categories;
    int layer = -1, input_dim = 0, steps = 1000, record_every = 1;
    int cuts = 1, samples = 32, budget = 8, epochs = 10000;
    std::uint64_t seed = 0, max_combos = 10000;
    double tau = kDefaultTauAct, tol = kDefaultRankTol;
    double lr = 0.01, accept_tol = 1e-6, residual_tol = 1e-8;
    bool random_order = false, all_solutions = false, reinit = false;
  } o;

  // matrix ------------------------------------------------------------
  auto* matrix = app.add_subcommand("matrix", "build and analyze unit-output matrices");
  matrix->require_subcommand(1);

  auto* mbuild = matrix->add_subcommand("build", "evaluate a layer's outputs over a dataset");
  mbuild->add_option("--network", o.network, "network json")->required();
  mbuild->add_option("--data", o.data, "dataset json")->required();
  mbuild->add_option("--layer", o.layer, "0-based hidden layer, -1 = last hidden");
  mbuild->add_option("--tau-act", o.tau, "activation threshold");
  mbuild->add_option("--out", o.out, "output path")->required();
  mbuild->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  mbuild->callback([&] {
    rc = guarded([&] {
      Network net = network_from_json(load_json_file(o.network));
      Dataset data = dataset_from_json(load_json_file(o.data));
      InterpMatrix m = build_interp_matrix(net, data, o.layer, o.tau);
      if (o.format == "json")
        save_text_file(o.out, matrix_to_json(m).dump(2) + "\n");
      else
        save_text_file(o.out, matrix_to_csv(m.values));
      std::cout << "matrix " << m.values.rows() << "x" << m.values.cols()
                << " source_layer=" << m.source_layer << " -> " << o.out << "\n";
      return 0;
    });
  });

  auto* manalyze = matrix->add_subcommand("analyze", "rank, singularity and sparsity report");
  manalyze->add_option("--matrix", o.matrix, "matrix csv or json")->required();
  manalyze->add_option("--tol", o.tol, "relative rank tolerance");
  manalyze->add_option("--input-dim", o.input_dim,
                       "network input dimension; enables the positive-column check");
  manalyze->add_option("--out", o.out, "report json path");
  manalyze->callback([&] {
    rc = guarded([&] {
      MatrixXd m = dense_from_file(o.matrix);
      RankReport r = rank_and_singularity(m, o.tol);
      double sp = sparsity(m);
      njson j;
      j["rows"] = m.rows();
      j["cols"] = m.cols();
      j["rank"] = r.rank;
      j["is_square"] = r.is_square;
      j["singular"] = r.singular;
      j["min_singular_value"] = r.min_singular_value;
      j["max_singular_value"] = r.max_singular_value;
      j["tol_used"] = r.tol_used;
      j["sparsity"] = sp;
      if (o.input_dim > 0 && r.is_square) {
        NecessaryConditionReport nc = necessary_condition_check(m, o.input_dim);
        njson witness = njson::array();
        for (Index c : nc.witness_columns) witness.push_back(c);
        j["necessary_condition"] = {{"pass", nc.pass}, {"witness_columns", witness}};
      }
      write_out(o.out, j);
      std::cout << "rank=" << r.rank << "/" << std::min(m.rows(), m.cols())
                << " singular=" << (r.singular ? "yes" : "no") << " sparsity=" << fmt(sp)
                << "\n";
      return 0;
    });
  });

  // mode --------------------------------------------------------------
  auto* mode = app.add_subcommand("mode", "symbolic activation-mode matrices");
  mode->require_subcommand(1);

  auto* mextract = mode->add_subcommand("extract", "classify blocks of a matrix");
  mextract->add_option("--matrix", o.matrix, "matrix json with row metadata")->required();
  mextract->add_option("--out", o.out, "mode json path");
  mextract->callback([&] {
    rc = guarded([&] {
      InterpMatrix m = matrix_from_json(load_json_file(o.matrix));
      auto rows = rows_by_subdomain(m);
      auto cols = auto_group_columns(m.values, rows);
      ModeMatrix mm = extract_mode(m.values, rows, cols);
      njson j = mode_to_json(mm);
      j["rendered"] = render_mode_table(mm);
      write_out(o.out, j);
      std::cout << "mode " << mm.rows() << "x" << mm.cols() << " ["
                << render_mode_table(mm) << "]\n";
      return 0;
    });
  });

  auto* mnorm = mode->add_subcommand("normalize", "permute a mode matrix to lower triangular");
  mnorm->add_option("--mode", o.mode, "mode json")->required();
  mnorm->add_option("--out", o.out, "result json path");
  mnorm->callback([&] {
    rc = guarded([&] {
      ModeMatrix mm = mode_from_json(load_json_file(o.mode));
      NormalizationResult r = normalize_mode(mm);
      njson j;
      j["achieved"] = normal_form_name(r.achieved);
      j["row_perm"] = r.row_perm;
      j["col_perm"] = r.col_perm;
      j["normalized"] = mode_to_json(r.normalized);
      write_out(o.out, j);
      std::cout << "achieved=" << normal_form_name(r.achieved)
                << " row_perm=[" << join_ints(r.row_perm) << "] col_perm=["
                << join_ints(r.col_perm) << "]\n";
      return r.achieved == NormalForm::Failed ? 3 : 0;
    });
  });

  // solve ---------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "output-layer solvers");
  solve->require_subcommand(1);

  auto* striang = solve->add_subcommand("triangular", "block forward substitution");
  striang->add_option("--matrix", o.matrix, "square matrix csv or json")->required();
  striang->add_option("--rhs", o.rhs, "targets (csv row/column or json array)")->required();
  striang->add_option("--blocks", o.blocks, "comma-separated block sizes")->required();
  striang->add_option("--tol", o.tol, "relative rank tolerance");
  striang->add_option("--out", o.out, "solution json path");
  striang->callback([&] {
    rc = guarded([&] {
      MatrixXd m = dense_from_file(o.matrix);
      VectorXd y = vector_from_file(o.rhs);
      auto sizes = parse_int_list<Index>(o.blocks, "--blocks");
      BlockTriangularSystem sys = block_triangular_from(m, y, sizes);
      VectorXd alpha = stack(solve_block_triangular(sys, o.tol));
      double resid = (m * alpha - y).lpNorm<Eigen::Infinity>();
      njson j;
      j["alpha"] = vector_to_json(alpha);
      j["residual"] = resid;
      j["blocks"] = sys.blocks();
      write_out(o.out, j);
      std::cout << "solved blocks=" << sys.blocks() << " residual=" << fmt(resid) << "\n";
      return 0;
    });
  });

  auto* soverparam = solve->add_subcommand("overparam", "square subsystems of a wide system");
  soverparam->add_option("--matrix", o.matrix, "C x m matrix, m >= C")->required();
  soverparam->add_option("--rhs", o.rhs, "targets")->required();
  soverparam->add_option("--max-combos", o.max_combos, "enumeration budget");
  soverparam->add_flag("--random-order", o.random_order, "sample subsets instead of lexicographic");
  soverparam->add_option("--seed", o.seed, "rng seed for --random-order");
  soverparam->add_flag("--all", o.all_solutions, "collect every solution in budget");
  soverparam->add_option("--free", o.free_values, "unchosen coefficients, ix=value,...");
  soverparam->add_option("--residual-tol", o.residual_tol, "acceptance threshold (inf norm)");
  soverparam->add_option("--tol", o.tol, "relative rank tolerance");
  soverparam->add_option("--out", o.out, "solutions json path");
  soverparam->callback([&] {
    rc = guarded([&] {
      MatrixXd m = dense_from_file(o.matrix);
      VectorXd y = vector_from_file(o.rhs);
      OverparamOptions opt;
      opt.max_combos = o.max_combos;
      opt.random_order = o.random_order;
      opt.seed = o.seed;
      opt.stop_at_first = !o.all_solutions;
      opt.free_values = parse_free_values(o.free_values);
      opt.residual_tol = o.residual_tol;
      opt.rank_tol = o.tol;
      OverparamResult r = solve_overparam(m, y, opt);
      njson j;
      j["status"] = r.status;
      j["combos_enumerated"] = r.combos_enumerated;
      njson sols = njson::array();
      for (const auto& s : r.solutions) {
        njson sj;
        njson chosen = njson::array();
        for (Index c : s.chosen) chosen.push_back(c);
        sj["chosen_columns"] = std::move(chosen);
        sj["alpha"] = vector_to_json(s.alpha);
        sj["residual"] = s.residual;
        sols.push_back(std::move(sj));
      }
      j["solutions"] = std::move(sols);
      write_out(o.out, j);
      std::cout << "status=" << r.status << " solutions=" << r.solutions.size()
                << " combos=" << r.combos_enumerated << "\n";
      return r.solutions.empty() ? 3 : 0;
    });
  });

  auto* sfit = solve->add_subcommand("fit", "minimum-norm least squares");
  sfit->add_option("--matrix", o.matrix, "C x m matrix")->required();
  sfit->add_option("--rhs", o.rhs, "targets")->required();
  sfit->add_option("--out", o.out, "solution json path");
  sfit->callback([&] {
    rc = guarded([&] {
      MatrixXd m = dense_from_file(o.matrix);
      VectorXd y = vector_from_file(o.rhs);
      FitResult f = fit_output_layer(m, y);
      njson j;
      j["alpha"] = vector_to_json(f.alpha);
      j["residual"] = f.residual;
      j["rank"] = f.rank;
      write_out(o.out, j);
      std::cout << "fit residual=" << fmt(f.residual) << " rank=" << f.rank << "\n";
      return 0;
    });
  });

  auto* smulti = solve->add_subcommand("multi", "shared factorization, several targets");
  smulti->add_option("--matrix", o.matrix, "C x m matrix")->required();
  smulti->add_option("--targets", o.targets, "C x outputs matrix")->required();
  smulti->add_option("--out", o.out, "solution json path");
  smulti->callback([&] {
    rc = guarded([&] {
      MatrixXd m = dense_from_file(o.matrix);
      MatrixXd t = dense_from_file(o.targets);
      MultiFitResult r = solve_multi_output(m, t);
      njson j;
      njson rows = njson::array();
      for (Index i = 0; i < r.alpha.rows(); ++i) {
        njson row = njson::array();
        for (Index c = 0; c < r.alpha.cols(); ++c) row.push_back(r.alpha(i, c));
        rows.push_back(std::move(row));
      }
      j["alpha"] = std::move(rows);
      j["residuals"] = vector_to_json(r.residuals);
      write_out(o.out, j);
      std::cout << "fit outputs=" << r.alpha.cols()
                << " max_residual=" << fmt(r.residuals.lpNorm<Eigen::Infinity>()) << "\n";
      return 0;
    });
  });

  // construct -----------------------------------------------------------
  auto* construct = app.add_subcommand("construct", "explicit network constructions");
  construct->require_subcommand(1);

  auto* cclass = construct->add_subcommand("classifier", "polytope inside/outside separator");
  cclass->add_option("--polytope", o.polytope, "faces json, inward orientation")->required();
  cclass->add_option("--data", o.data, "points json; y > 0.5 marks inside")->required();
  cclass->add_option("--tau-act", o.tau, "activation threshold");
  cclass->add_option("--out", o.out, "network json path")->required();
  cclass->callback([&] {
    rc = guarded([&] {
      ConvexPolytope poly = make_polytope(faces_from_json(load_json_file(o.polytope)), o.tau);
      Dataset data = dataset_from_json(load_json_file(o.data));
      std::vector<VectorXd> inside, outside;
      for (const auto& p : data.points)
        (p.y(0) > 0.5 ? inside : outside).push_back(p.x);
      ClassifierBuild b = build_polytope_classifier(poly, inside, outside, o.tau);
      save_text_file(o.out, network_to_json(b.net).dump(2) + "\n");
      std::cout << b.separated << "/" << b.total << " points separated, layers="
                << b.net.layers.size() << " order=[" << join_ints(b.face_order) << "] -> "
                << o.out << "\n";
      return 0;
    });
  });

  // route -----------------------------------------------------------------
  auto* route = app.add_subcommand("route", "activated subnetworks and collapse sets");
  route->require_subcommand(1);

  auto* rtrace = route->add_subcommand("trace", "units activated by a point subset");
  rtrace->add_option("--network", o.network, "network json")->required();
  rtrace->add_option("--data", o.data, "dataset json")->required();
  rtrace->add_option("--subset", o.subset, "point indices, comma separated; default all");
  rtrace->add_option("--tau-act", o.tau, "activation threshold");
  rtrace->add_option("--out", o.out, "route json path");
  rtrace->callback([&] {
    rc = guarded([&] {
      Network net = network_from_json(load_json_file(o.network));
      Dataset data = dataset_from_json(load_json_file(o.data));
      std::vector<Index> subset = parse_int_list<Index>(o.subset, "--subset");
      if (o.subset.empty())
        for (Index k = 0; k < data.size(); ++k) subset.push_back(k);
      Route r = trace_route(net, data, subset, o.tau);
      write_out(o.out, route_to_json(r));
      std::cout << "route layers=" << r.layer_units.size();
      for (const auto& lu : r.layer_units) std::cout << " " << lu.size() << "u";
      std::cout << "\n";
      return 0;
    });
  });

  auto* rcollapse = route->add_subcommand("collapse", "collapse sets and shared trajectories");
  rcollapse->add_option("--network", o.network, "network json")->required();
  rcollapse->add_option("--data", o.data, "dataset json")->required();
  rcollapse->add_option("--subset", o.subset, "route source points; default all");
  rcollapse->add_option("--tau-act", o.tau, "activation threshold");
  rcollapse->add_option("--out", o.out, "report json path");
  rcollapse->callback([&] {
    rc = guarded([&] {
      Network net = network_from_json(load_json_file(o.network));
      Dataset data = dataset_from_json(load_json_file(o.data));
      std::vector<Index> subset = parse_int_list<Index>(o.subset, "--subset");
      if (o.subset.empty())
        for (Index k = 0; k < data.size(); ++k) subset.push_back(k);
      Route r = trace_route(net, data, subset, o.tau);
      CollapseReport rep = collapse_sets(net, data, r, o.tau);
      InterpMatrix m = build_interp_matrix(net, data, -1, o.tau);
      std::map<int, Index> dup = duplicate_rows(m, rep);
      njson j;
      j["route"] = route_to_json(r);
      njson sets = njson::array();
      int nontrivial = 0;
      for (const auto& s : rep.sets) {
        njson sj;
        sj["nu"] = s.nu;
        njson mem = njson::array();
        for (Index k : s.members) mem.push_back(k);
        sj["members"] = std::move(mem);
        njson mis = njson::array();
        for (Index k : s.members_in_source) mis.push_back(k);
        sj["members_in_source"] = std::move(mis);
        sj["trajectories_identical"] = s.trajectories_identical;
        sj["zero_terminal"] = s.zero_terminal;
        njson traj = njson::array();
        for (const auto& v : s.trajectory) traj.push_back(vector_to_json(v));
        sj["trajectory"] = std::move(traj);
        sets.push_back(std::move(sj));
        if (s.members.size() >= 2) ++nontrivial;
      }
      j["sets"] = std::move(sets);
      njson dj = njson::object();
      for (const auto& [nu, count] : dup) dj[std::to_string(nu)] = count;
      j["duplicate_rows"] = std::move(dj);
      write_out(o.out, j);
      std::cout << "collapse sets=" << rep.sets.size() << " nontrivial=" << nontrivial
                << "\n";
      return 0;
    });
  });

  // sparsity ---------------------------------------------------------------
  auto* sparsity_cmd = app.add_subcommand("sparsity", "zero fractions per layer");
  sparsity_cmd->require_subcommand(1);

  auto* sreport = sparsity_cmd->add_subcommand("report", "layerwise sparsity over a dataset");
  sreport->add_option("--network", o.network, "network json")->required();
  sreport->add_option("--data", o.data, "dataset json")->required();
  sreport->add_option("--tau-act", o.tau, "activation threshold");
  sreport->add_option("--out", o.out, "report path");
  sreport->add_option("--format", o.report_format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  sreport->callback([&] {
    rc = guarded([&] {
      Network net = network_from_json(load_json_file(o.network));
      Dataset data = dataset_from_json(load_json_file(o.data));
      auto rows = layerwise_sparsity(net, data, o.tau);
      bool nondecreasing = true;
      njson arr = njson::array();
      std::string line;
      std::string csv = "layer,sparsity\n";
      char buf[64];
      for (std::size_t i = 0; i < rows.size(); ++i) {
        arr.push_back({{"layer", rows[i].layer}, {"sparsity", rows[i].value}});
        if (i && rows[i].value < rows[i - 1].value - 1e-15) nondecreasing = false;
        if (i) line += " ";
        line += fmt(rows[i].value);
        std::snprintf(buf, sizeof(buf), "%d,%.17g\n", rows[i].layer, rows[i].value);
        csv += buf;
      }
      if (!o.out.empty() && o.report_format == "csv") {
        save_text_file(o.out, csv);
      } else {
        njson j;
        j["layers"] = std::move(arr);
        j["nondecreasing"] = nondecreasing;
        write_out(o.out, j);
      }
      std::cout << "sparsity: " << line
                << " (non-decreasing: " << (nondecreasing ? "yes" : "no") << ")\n";
      return 0;
    });
  });

  // decompose ----------------------------------------------------------------
  auto* decompose = app.add_subcommand("decompose", "alternative dataset decompositions");
  decompose->require_subcommand(1);

  auto* dexplore = decompose->add_subcommand("explore", "sample cut arrangements");
  dexplore->add_option("--data", o.data, "dataset json, scalar targets")->required();
  dexplore->add_option("--cuts", o.cuts, "hyperplanes per arrangement");
  dexplore->add_option("--samples", o.samples, "number of arrangements");
  dexplore->add_option("--seed", o.seed, "rng seed");
  dexplore->add_option("--tau-act", o.tau, "signature threshold");
  dexplore->add_option("--out", o.out, "decompositions json path");
  dexplore->callback([&] {
    rc = guarded([&] {
      Dataset data = dataset_from_json(load_json_file(o.data));
      DecompositionOptions opt;
      opt.n_cuts = o.cuts;
      opt.samples = o.samples;
      opt.seed = o.seed;
      opt.tau_act = o.tau;
      auto ds = explore_decompositions(data, opt);
      int zero_resid = 0;
      njson arr = njson::array();
      for (const auto& d : ds) {
        njson dj;
        dj["cuts"] = faces_to_json(d.cuts)["faces"];
        njson cells = njson::array();
        for (const auto& c : d.cells) {
          njson cj;
          njson mem = njson::array();
          for (Index k : c.members) mem.push_back(k);
          cj["members"] = std::move(mem);
          cj["w"] = vector_to_json(c.w);
          cj["b"] = c.b;
          cj["residual"] = c.residual;
          cells.push_back(std::move(cj));
        }
        dj["cells"] = std::move(cells);
        dj["total_residual"] = d.total_residual;
        arr.push_back(std::move(dj));
        if (d.total_residual == 0.0) ++zero_resid;
      }
      njson j;
      j["decompositions"] = std::move(arr);
      write_out(o.out, j);
      std::cout << "decompositions=" << ds.size() << " zero_residual=" << zero_resid << "\n";
      return 0;
    });
  });

  // disentangle -----------------------------------------------------------
  auto* disentangle = app.add_subcommand("disentangle", "code-layer separability checks");
  disentangle->require_subcommand(1);

  auto* dcheck = disentangle->add_subcommand("check", "category support disjointness");
  dcheck->add_option("--code", o.code, "code matrix csv or json")->required();
  dcheck->add_option("--categories", o.categories, "per-row category ids, comma separated")
      ->required();
  dcheck->add_option("--epochs", o.epochs, "perceptron budget for the fallback check");
  dcheck->add_option("--out", o.out, "verdict json path");
  dcheck->callback([&] {
    rc = guarded([&] {
      MatrixXd code = dense_from_file(o.code);
      auto cats = parse_int_list<int>(o.categories, "--categories");
      DisentangleVerdict v = disentangle_check(code, cats, o.epochs);
      njson j;
      j["disentangled"] = v.disentangled;
      njson perm = njson::array();
      for (Index c : v.column_permutation) perm.push_back(c);
      j["column_permutation"] = std::move(perm);
      njson act = njson::object();
      for (const auto& [cat, cols] : v.activated) {
        njson a = njson::array();
        for (Index c : cols) a.push_back(c);
        act[std::to_string(cat)] = std::move(a);
      }
      j["activated"] = std::move(act);
      njson shared = njson::array();
      for (Index c : v.shared_columns) shared.push_back(c);
      j["shared_columns"] = std::move(shared);
      njson zr = njson::array();
      for (Index r : v.zero_rows) zr.push_back(r);
      j["zero_rows"] = std::move(zr);
      njson uc = njson::array();
      for (Index c : v.unused_columns) uc.push_back(c);
      j["unused_columns"] = std::move(uc);
      j["separable_but_entangled"] = v.separable_but_entangled;
      write_out(o.out, j);
      std::cout << "disentangled=" << (v.disentangled ? "yes" : "no")
                << " shared_columns=" << v.shared_columns.size()
                << " separable_but_entangled=" << (v.separable_but_entangled ? "yes" : "no")
                << "\n";
      return 0;
    });
  });

  // train ----------------------------------------------------------------
  auto* train = app.add_subcommand("train", "full-batch gradient descent");
  train->require_subcommand(1);

  auto* trun = train->add_subcommand("run", "train a network on a dataset");
  trun->add_option("--network", o.network, "network json")->required();
  trun->add_option("--data", o.data, "dataset json")->required();
  trun->add_option("--lr", o.lr, "learning rate");
  trun->add_option("--steps", o.steps, "gradient steps");
  trun->add_option("--freeze", o.freeze, "0-based layer indices to freeze");
  trun->add_option("--record-every", o.record_every, "loss recording stride");
  trun->add_option("--seed", o.seed, "rng seed for --reinit");
  trun->add_flag("--reinit", o.reinit, "re-draw unfrozen layers before training");
  trun->add_option("--out", o.out, "trace path");
  trun->add_option("--format", o.report_format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  trun->add_option("--net-out", o.net_out, "final network json path");
  trun->callback([&] {
    rc = guarded([&] {
      Network net = network_from_json(load_json_file(o.network));
      Dataset data = dataset_from_json(load_json_file(o.data));
      TrainConfig cfg;
      cfg.lr = o.lr;
      cfg.steps = o.steps;
      for (int f : parse_int_list<int>(o.freeze, "--freeze")) cfg.freeze.insert(f);
      cfg.record_every = o.record_every;
      cfg.seed = o.seed;
      cfg.reinit = o.reinit;
      TrainTrace t = train_full_batch(net, data, cfg);
      if (!o.out.empty() && o.report_format == "csv") {
        std::string csv = "step,loss";
        std::vector<int> ids;
        if (!t.occupancy.empty())
          for (const auto& [id, count] : t.occupancy.front()) ids.push_back(id);
        for (int id : ids) csv += ",occupancy_" + std::to_string(id);
        csv += "\n";
        char buf[80];
        for (std::size_t i = 0; i < t.step.size(); ++i) {
          std::snprintf(buf, sizeof(buf), "%d,%.17g", t.step[i], t.loss[i]);
          csv += buf;
          for (int id : ids) {
            auto it = t.occupancy[i].find(id);
            csv += "," + std::to_string(it == t.occupancy[i].end() ? 0 : it->second);
          }
          csv += "\n";
        }
        save_text_file(o.out, csv);
      } else {
        njson j;
        j["step"] = t.step;
        j["loss"] = t.loss;
        njson occ = njson::array();
        for (const auto& m : t.occupancy) {
          njson mo = njson::object();
          for (const auto& [id, count] : m) mo[std::to_string(id)] = count;
          occ.push_back(std::move(mo));
        }
        j["occupancy"] = std::move(occ);
        j["diverged"] = t.diverged;
        j["final_network"] = network_to_json(t.final_net);
        write_out(o.out, j);
      }
      if (!o.net_out.empty())
        save_text_file(o.net_out, network_to_json(t.final_net).dump(2) + "\n");
      std::cout << "final_loss=" << fmt(t.loss.back())
                << " diverged=" << (t.diverged ? "yes" : "no") << " steps=" << o.steps
                << "\n";
      return t.diverged ? 3 : 0;
    });
  });

  // search ---------------------------------------------------------------
  auto* search = app.add_subcommand("search", "combined solving strategies");
  search->require_subcommand(1);

  auto* sspace = search->add_subcommand("spacetime",
                                        "alternate direct solves with training blocks");
  sspace->add_option("--network", o.network, "network json")->required();
  sspace->add_option("--data", o.data, "dataset json, scalar targets")->required();
  sspace->add_option("--budget", o.budget, "training blocks between solves");
  sspace->add_option("--lr", o.lr, "learning rate per block");
  sspace->add_option("--steps", o.steps, "gradient steps per block");
  sspace->add_option("--seed", o.seed, "rng seed");
  sspace->add_option("--accept-tol", o.accept_tol, "solve acceptance residual (inf norm)");
  sspace->add_option("--max-combos", o.max_combos, "overparam enumeration budget");
  sspace->add_option("--out", o.out, "result json path");
  sspace->add_option("--net-out", o.net_out, "solved network json path");
  sspace->callback([&] {
    rc = guarded([&] {
      Network net = network_from_json(load_json_file(o.network));
      Dataset data = dataset_from_json(load_json_file(o.data));
      SpacetimeConfig cfg;
      cfg.max_blocks = o.budget;
      cfg.train.lr = o.lr;
      cfg.train.steps = o.steps;
      cfg.train.seed = o.seed;
      cfg.accept_tol = o.accept_tol;
      cfg.overparam.max_combos = o.max_combos;
      cfg.overparam.seed = o.seed;
      SpacetimeResult r = spacetime_search(net, data, cfg);
      njson j;
      j["solved"] = r.solved;
      j["method"] = r.method;
      j["blocks_used"] = r.blocks_used;
      j["residual"] = r.residual;
      j["network"] = network_to_json(r.net);
      write_out(o.out, j);
      if (r.solved && !o.net_out.empty())
        save_text_file(o.net_out, network_to_json(r.net).dump(2) + "\n");
      std::cout << "solved=" << (r.solved ? "yes" : "no")
                << " method=" << (r.method.empty() ? "none" : r.method)
                << " blocks=" << r.blocks_used << " residual=" << fmt(r.residual) << "\n";
      return r.solved ? 0 : 3;
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return rc;
}
