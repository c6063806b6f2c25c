#pragma once

#include <json.hpp>
#include <string>

#include "relu_interp/activation_mode.hpp"
#include "relu_interp/interp_matrix.hpp"
#include "relu_interp/types.hpp"

namespace relu_interp {

using njson = nlohmann::ordered_json;

// File plumbing. Readers throw ValidationError naming the offending field.
njson load_json_file(const std::string& path);
void save_text_file(const std::string& path, const std::string& text);

// network: {"input_dim": n, "layers": [{"weights": [[..]], "biases": [..],
//           "activation": "relu"|"linear"}]}
Network network_from_json(const njson& j);
njson network_to_json(const Network& net);

// dataset: {"points": [{"x": [..], "y": [..], "subdomain"?: k}]}
Dataset dataset_from_json(const njson& j);
njson dataset_to_json(const Dataset& data);

// polytope faces: {"faces": [{"w": [..], "b": c}]}
std::vector<Hyperplane> faces_from_json(const njson& j);
njson faces_to_json(const std::vector<Hyperplane>& faces);

// matrix: {"values": [[..]], "rows": [{"point","subdomain"}],
//          "cols": [{"layer","unit"}], "source_layer": l}
InterpMatrix matrix_from_json(const njson& j);
njson matrix_to_json(const InterpMatrix& m);

// mode matrix: {"grid": [["P","0",..],..], "row_labels": [..], "col_labels": [..]}
ModeMatrix mode_from_json(const njson& j);
njson mode_to_json(const ModeMatrix& mode);

// CSV with 17 significant digits; every double round-trips bit-exactly.
std::string matrix_to_csv(const MatrixXd& m);
MatrixXd matrix_from_csv(const std::string& text);

njson vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const njson& j, const std::string& field);

// Bare 2D number array <-> MatrixXd.
MatrixXd dense_from_json(const njson& j, const std::string& field);
njson dense_to_json(const MatrixXd& m);

}  // namespace relu_interp
