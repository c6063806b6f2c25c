#pragma once

#include <random>

#include "relu_interp/types.hpp"

namespace fixtures {

using namespace relu_interp;

inline VectorXd vec(std::initializer_list<double> vs) {
  VectorXd v(static_cast<Index>(vs.size()));
  Index i = 0;
  for (double x : vs) v(i++) = x;
  return v;
}

inline MatrixXd mat(Index rows, Index cols, std::initializer_list<double> vs) {
  MatrixXd m(rows, cols);
  Index i = 0;
  for (double x : vs) {
    m(i / cols, i % cols) = x;
    ++i;
  }
  return m;
}

// 1-2-1 net computing |x|: hidden units sigma(x), sigma(-x), output sum.
inline Network abs_net() {
  Network net;
  net.input_dim = 1;
  AffineLayer hidden;
  hidden.W = mat(2, 1, {1, -1});
  hidden.b = vec({0, 0});
  hidden.act = Activation::Relu;
  AffineLayer out;
  out.W = mat(1, 2, {1, 1});
  out.b = vec({0});
  out.act = Activation::Linear;
  net.layers = {hidden, out};
  return net;
}

// D = {-1, 0, 2} with |x| targets; subdomains {1, 1, 2}.
inline Dataset abs_data() {
  Dataset d;
  d.points.push_back({vec({-1}), vec({1}), 1});
  d.points.push_back({vec({0}), vec({0}), 1});
  d.points.push_back({vec({2}), vec({2}), 2});
  return d;
}

// Random relu net with positive-forcing option off: plain uniform weights.
inline Network random_net(std::mt19937_64& rng, int input_dim,
                          const std::vector<int>& widths, bool linear_output = true) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Network net;
  net.input_dim = input_dim;
  int fan_in = input_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    AffineLayer l;
    l.W = MatrixXd::NullaryExpr(widths[i], fan_in, [&] { return u(rng); });
    l.b = VectorXd::NullaryExpr(widths[i], [&] { return u(rng); });
    l.act = (i + 1 == widths.size() && linear_output) ? Activation::Linear
                                                      : Activation::Relu;
    net.layers.push_back(std::move(l));
    fan_in = widths[i];
  }
  return net;
}

inline Dataset random_data(std::mt19937_64& rng, int count, int input_dim,
                           int output_dim, double span = 2.0) {
  std::uniform_real_distribution<double> u(-span, span);
  Dataset d;
  for (int k = 0; k < count; ++k) {
    DataPoint p;
    p.x = VectorXd::NullaryExpr(input_dim, [&] { return u(rng); });
    p.y = VectorXd::NullaryExpr(output_dim, [&] { return u(rng); });
    d.points.push_back(std::move(p));
  }
  return d;
}

}  // namespace fixtures
