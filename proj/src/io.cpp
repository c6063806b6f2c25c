#include "relu_interp/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace relu_interp {

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw ValidationError(field + ": " + why);
}

const njson& require(const njson& j, const std::string& field,
                     const std::string& ctx) {
  if (!j.is_object()) bad_field(ctx, "expected an object");
  auto it = j.find(field);
  if (it == j.end()) bad_field(ctx + "." + field, "missing");
  return *it;
}

double as_number(const njson& j, const std::string& field) {
  if (!j.is_number()) bad_field(field, "expected a number");
  return j.get<double>();
}

}  // namespace

njson load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  njson j;
  try {
    j = njson::parse(in);
  } catch (const std::exception& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
  return j;
}

void save_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << text;
  if (!out) throw ValidationError("write failed: " + path);
}

VectorXd vector_from_json(const njson& j, const std::string& field) {
  if (!j.is_array()) bad_field(field, "expected an array of numbers");
  VectorXd v(j.size());
  Index i = 0;
  for (const auto& e : j) v(i++) = as_number(e, field);
  return v;
}

njson vector_to_json(const VectorXd& v) {
  njson a = njson::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

MatrixXd dense_from_json(const njson& j, const std::string& field) {
  if (!j.is_array() || j.empty()) bad_field(field, "expected a nonempty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  MatrixXd m(j.size(), cols);
  Index r = 0;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols)
      bad_field(field, "rows must be equally sized arrays");
    Index c = 0;
    for (const auto& e : row) m(r, c++) = as_number(e, field);
    ++r;
  }
  return m;
}

njson dense_to_json(const MatrixXd& m) {
  njson rows = njson::array();
  for (Index r = 0; r < m.rows(); ++r) {
    njson row = njson::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Network network_from_json(const njson& j) {
  Network net;
  const njson& dim = require(j, "input_dim", "network");
  if (!dim.is_number_integer() || dim.get<int>() < 1)
    bad_field("network.input_dim", "expected a positive integer");
  net.input_dim = dim.get<int>();
  const njson& layers = require(j, "layers", "network");
  if (!layers.is_array() || layers.empty())
    bad_field("network.layers", "expected a nonempty array");
  int idx = 0;
  for (const auto& lj : layers) {
    const std::string ctx = "network.layers[" + std::to_string(idx++) + "]";
    AffineLayer layer;
    layer.W = dense_from_json(require(lj, "weights", ctx), ctx + ".weights");
    layer.b = vector_from_json(require(lj, "biases", ctx), ctx + ".biases");
    const njson& act = require(lj, "activation", ctx);
    if (act == "relu")
      layer.act = Activation::Relu;
    else if (act == "linear")
      layer.act = Activation::Linear;
    else
      bad_field(ctx + ".activation", "expected \"relu\" or \"linear\"");
    net.layers.push_back(std::move(layer));
  }
  validate_network(net);
  return net;
}

njson network_to_json(const Network& net) {
  njson j;
  j["input_dim"] = net.input_dim;
  njson layers = njson::array();
  for (const auto& l : net.layers) {
    njson lj;
    lj["weights"] = dense_to_json(l.W);
    lj["biases"] = vector_to_json(l.b);
    lj["activation"] = l.act == Activation::Relu ? "relu" : "linear";
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j;
}

Dataset dataset_from_json(const njson& j) {
  Dataset data;
  const njson& points = require(j, "points", "dataset");
  if (!points.is_array() || points.empty())
    bad_field("dataset.points", "expected a nonempty array");
  int idx = 0;
  for (const auto& pj : points) {
    const std::string ctx = "dataset.points[" + std::to_string(idx++) + "]";
    DataPoint p;
    p.x = vector_from_json(require(pj, "x", ctx), ctx + ".x");
    p.y = vector_from_json(require(pj, "y", ctx), ctx + ".y");
    if (pj.contains("subdomain")) {
      const njson& s = pj["subdomain"];
      if (!s.is_number_integer() || s.get<int>() < 0)
        bad_field(ctx + ".subdomain", "expected a nonnegative integer");
      p.subdomain = s.get<int>();
    }
    data.points.push_back(std::move(p));
  }
  validate_dataset(data);
  return data;
}

njson dataset_to_json(const Dataset& data) {
  njson j;
  njson points = njson::array();
  for (const auto& p : data.points) {
    njson pj;
    pj["x"] = vector_to_json(p.x);
    pj["y"] = vector_to_json(p.y);
    if (p.subdomain != 0) pj["subdomain"] = p.subdomain;
    points.push_back(std::move(pj));
  }
  j["points"] = std::move(points);
  return j;
}

std::vector<Hyperplane> faces_from_json(const njson& j) {
  const njson& faces = require(j, "faces", "polytope");
  if (!faces.is_array() || faces.empty())
    bad_field("polytope.faces", "expected a nonempty array");
  std::vector<Hyperplane> out;
  int idx = 0;
  for (const auto& fj : faces) {
    const std::string ctx = "polytope.faces[" + std::to_string(idx++) + "]";
    Hyperplane h;
    h.w = vector_from_json(require(fj, "w", ctx), ctx + ".w");
    h.b = as_number(require(fj, "b", ctx), ctx + ".b");
    validate_hyperplane(h, ctx);
    out.push_back(std::move(h));
  }
  return out;
}

njson faces_to_json(const std::vector<Hyperplane>& faces) {
  njson j;
  njson arr = njson::array();
  for (const auto& h : faces) {
    njson fj;
    fj["w"] = vector_to_json(h.w);
    fj["b"] = h.b;
    arr.push_back(std::move(fj));
  }
  j["faces"] = std::move(arr);
  return j;
}

InterpMatrix matrix_from_json(const njson& j) {
  InterpMatrix m;
  m.values = dense_from_json(require(j, "values", "matrix"), "matrix.values");
  const njson& rows = require(j, "rows", "matrix");
  const njson& cols = require(j, "cols", "matrix");
  if (!rows.is_array() || static_cast<Index>(rows.size()) != m.values.rows())
    bad_field("matrix.rows", "expected one entry per matrix row");
  if (!cols.is_array() || static_cast<Index>(cols.size()) != m.values.cols())
    bad_field("matrix.cols", "expected one entry per matrix column");
  for (const auto& rj : rows) {
    RowMeta rm;
    rm.point = require(rj, "point", "matrix.rows[]").get<Index>();
    rm.subdomain = require(rj, "subdomain", "matrix.rows[]").get<int>();
    m.row_meta.push_back(rm);
  }
  for (const auto& cj : cols) {
    ColMeta cm;
    cm.layer = require(cj, "layer", "matrix.cols[]").get<int>();
    cm.unit = require(cj, "unit", "matrix.cols[]").get<int>();
    m.col_meta.push_back(cm);
  }
  m.source_layer = require(j, "source_layer", "matrix").get<int>();
  return m;
}

njson matrix_to_json(const InterpMatrix& m) {
  njson j;
  j["values"] = dense_to_json(m.values);
  njson rows = njson::array();
  for (const auto& r : m.row_meta)
    rows.push_back({{"point", r.point}, {"subdomain", r.subdomain}});
  njson cols = njson::array();
  for (const auto& c : m.col_meta)
    cols.push_back({{"layer", c.layer}, {"unit", c.unit}});
  j["rows"] = std::move(rows);
  j["cols"] = std::move(cols);
  j["source_layer"] = m.source_layer;
  return j;
}

ModeMatrix mode_from_json(const njson& j) {
  ModeMatrix mode;
  const njson& grid = require(j, "grid", "mode");
  if (!grid.is_array() || grid.empty())
    bad_field("mode.grid", "expected a nonempty array of rows");
  for (const auto& row : grid) {
    if (!row.is_array()) bad_field("mode.grid", "rows must be arrays");
    std::vector<ModeSymbol> r;
    for (const auto& e : row) {
      if (!e.is_string()) bad_field("mode.grid", "cells must be symbol strings");
      const std::string s = e.get<std::string>();
      if (s == "P")
        r.push_back(ModeSymbol::P);
      else if (s == "0")
        r.push_back(ModeSymbol::Z);
      else if (s == "0'")
        r.push_back(ModeSymbol::Zp);
      else if (s == "U")
        r.push_back(ModeSymbol::U);
      else
        bad_field("mode.grid", "unknown symbol \"" + s + "\"");
    }
    mode.grid.push_back(std::move(r));
  }
  if (j.contains("row_labels"))
    for (const auto& e : j["row_labels"]) mode.row_labels.push_back(e.get<std::string>());
  if (j.contains("col_labels"))
    for (const auto& e : j["col_labels"]) mode.col_labels.push_back(e.get<std::string>());
  return mode;
}

njson mode_to_json(const ModeMatrix& mode) {
  njson j;
  njson grid = njson::array();
  for (const auto& row : mode.grid) {
    njson r = njson::array();
    for (ModeSymbol s : row) r.push_back(mode_symbol_name(s));
    grid.push_back(std::move(r));
  }
  j["grid"] = std::move(grid);
  j["row_labels"] = mode.row_labels;
  j["col_labels"] = mode.col_labels;
  return j;
}

std::string matrix_to_csv(const MatrixXd& m) {
  std::string out;
  char buf[64];
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      if (c) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

MatrixXd matrix_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw ValidationError("csv: cannot parse cell \"" + cell + "\"");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("csv: no rows");
  const std::size_t cols = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != cols) throw ValidationError("csv: ragged rows");
  MatrixXd m(rows.size(), cols);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  return m;
}

}  // namespace relu_interp
