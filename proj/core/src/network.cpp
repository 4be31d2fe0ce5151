#include "htsgd/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "htsgd/errors.hpp"

namespace htsgd {

namespace {

std::string lower(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Eigen::MatrixXd activate_matrix(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::ReLU:
      return z.cwiseMax(0.0);
    case Activation::Sigmoid:
      return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    case Activation::Tanh:
      return z.array().tanh().matrix();
  }
  return z;
}

Eigen::MatrixXd activate_derivative_matrix(Activation a, const Eigen::MatrixXd& z) {
  return z.unaryExpr([a](double v) { return activate_derivative(a, v); });
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes) {
  if (labels.size() != rows) throw DomainError("label count does not match feature rows");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DomainError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

// Pre-activations Z = X W + 1 b^T (m x n).
Eigen::MatrixXd preactivations(const NetworkParams& params, const Eigen::MatrixXd& features) {
  const auto& s = params.shape();
  if (static_cast<std::size_t>(features.cols()) != s.d) {
    throw DomainError("feature dimension " + std::to_string(features.cols()) + " does not match network d=" +
                      std::to_string(s.d));
  }
  Eigen::MatrixXd z = features * params.weights();
  if (s.bias) z.rowwise() += params.theta().row(static_cast<Eigen::Index>(s.d));
  return z;
}

// Logits from hidden activations A (m x n).
Eigen::MatrixXd output_layer(const NetworkParams& params, const Eigen::MatrixXd& hidden) {
  const auto& s = params.shape();
  const double inv_n = 1.0 / static_cast<double>(s.n);
  const auto l = static_cast<Eigen::Index>(s.l);
  if (s.mode == SecondLayer::Trainable) {
    const auto c = params.theta().middleRows(static_cast<Eigen::Index>(s.second_layer_offset()), l);
    return (hidden * c.transpose()) * inv_n;
  }
  const Eigen::VectorXd mean = hidden.rowwise().sum() * inv_n;
  return mean.replicate(1, l);
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU:
      return "relu";
    case Activation::Sigmoid:
      return "sigmoid";
    case Activation::Tanh:
      return "tanh";
  }
  return "?";
}

std::string_view to_string(SecondLayer m) { return m == SecondLayer::Fixed ? "fixed" : "trainable"; }

Activation parse_activation(std::string_view text) {
  const std::string s = lower(text);
  if (s == "relu") return Activation::ReLU;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "tanh") return Activation::Tanh;
  throw DomainError("unknown activation '" + std::string(text) + "' (expected relu, sigmoid or tanh)");
}

SecondLayer parse_second_layer(std::string_view text) {
  const std::string s = lower(text);
  if (s == "fixed") return SecondLayer::Fixed;
  if (s == "trainable") return SecondLayer::Trainable;
  throw DomainError("unknown second-layer mode '" + std::string(text) + "' (expected fixed or trainable)");
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::ReLU:
      return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid:
      return 1.0 / (1.0 + std::exp(-z));
    case Activation::Tanh:
      return std::tanh(z);
  }
  return z;
}

double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::ReLU:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 0.0;
}

void NetworkShape::validate() const {
  if (n == 0 || d == 0 || l == 0) throw DomainError("network dimensions n, d, l must all be >= 1");
}

NetworkParams::NetworkParams(const NetworkShape& shape) : shape_(shape) {
  shape_.validate();
  theta_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(shape_.unit_dim()), static_cast<Eigen::Index>(shape_.n));
}

NetworkParams::NetworkParams(const NetworkShape& shape, Eigen::MatrixXd theta) : shape_(shape), theta_(std::move(theta)) {
  shape_.validate();
  if (static_cast<std::size_t>(theta_.rows()) != shape_.unit_dim() || static_cast<std::size_t>(theta_.cols()) != shape_.n) {
    throw DomainError("parameter matrix must be " + std::to_string(shape_.unit_dim()) + " x " + std::to_string(shape_.n));
  }
}

UnitParams NetworkParams::unit(std::size_t i) const {
  if (i >= shape_.n) throw DomainError("unit index out of range");
  const auto col = theta_.col(static_cast<Eigen::Index>(i));
  const auto d = static_cast<Eigen::Index>(shape_.d);
  const auto l = static_cast<Eigen::Index>(shape_.l);
  UnitParams u;
  u.w = col.head(d);
  u.b = shape_.bias ? col(d) : 0.0;
  if (shape_.mode == SecondLayer::Trainable) {
    u.c = col.segment(static_cast<Eigen::Index>(shape_.second_layer_offset()), l);
  } else {
    u.c = Eigen::VectorXd::Constant(l, 1.0 / static_cast<double>(shape_.n));
  }
  return u;
}

void NetworkParams::set_unit(std::size_t i, const UnitParams& u) {
  if (i >= shape_.n) throw DomainError("unit index out of range");
  if (static_cast<std::size_t>(u.w.size()) != shape_.d) throw DomainError("unit weight length must equal d");
  auto col = theta_.col(static_cast<Eigen::Index>(i));
  const auto d = static_cast<Eigen::Index>(shape_.d);
  col.head(d) = u.w;
  if (shape_.bias) col(d) = u.b;
  if (shape_.mode == SecondLayer::Trainable) {
    if (static_cast<std::size_t>(u.c.size()) != shape_.l) throw DomainError("second-layer length must equal l");
    col.segment(static_cast<Eigen::Index>(shape_.second_layer_offset()), static_cast<Eigen::Index>(shape_.l)) = u.c;
  }
}

Eigen::VectorXd unit_output(const UnitParams& u, Activation activation, const Eigen::VectorXd& x) {
  if (u.w.size() != x.size()) throw DomainError("unit weight length does not match feature length");
  return u.c * activate(activation, u.w.dot(x) + u.b);
}

Eigen::VectorXd forward(const NetworkParams& params, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd row = x.transpose();
  return forward_batch(params, row).row(0).transpose();
}

Eigen::MatrixXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& features) {
  return output_layer(params, activate_matrix(params.shape().activation, preactivations(params, features)));
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    auto row = p.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return p;
}

double loss(const Eigen::VectorXd& logits, std::size_t y) {
  if (y >= static_cast<std::size_t>(logits.size())) throw DomainError("label outside logits range");
  const double m = logits.maxCoeff();
  const double log_sum = std::log((logits.array() - m).exp().sum()) + m;
  return std::max(0.0, log_sum - logits(static_cast<Eigen::Index>(y)));
}

std::size_t predict(const Eigen::VectorXd& logits) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < logits.size(); ++k) {
    if (logits(k) > logits(best)) best = k;
  }
  return static_cast<std::size_t>(best);
}

double accuracy(const NetworkParams& params, const Eigen::MatrixXd& features, std::span<const int> labels) {
  check_labels(labels, static_cast<std::size_t>(features.rows()), params.shape().l);
  if (labels.empty()) return 0.0;
  const Eigen::MatrixXd logits = forward_batch(params, features);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (predict(logits.row(i).transpose()) == static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double mean_loss(const NetworkParams& params, const Eigen::MatrixXd& features, std::span<const int> labels) {
  check_labels(labels, static_cast<std::size_t>(features.rows()), params.shape().l);
  if (labels.empty()) return 0.0;
  const Eigen::MatrixXd logits = forward_batch(params, features);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    total += loss(logits.row(i).transpose(), static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]));
  }
  return total / static_cast<double>(labels.size());
}

RiskGradient grad_risk(const NetworkParams& params, const Eigen::MatrixXd& features, std::span<const int> labels) {
  if (features.rows() == 0) throw DomainError("gradient requires a non-empty batch");
  const auto& s = params.shape();
  check_labels(labels, static_cast<std::size_t>(features.rows()), s.l);

  const double inv_n = 1.0 / static_cast<double>(s.n);
  const double inv_m = 1.0 / static_cast<double>(features.rows());
  const auto d = static_cast<Eigen::Index>(s.d);
  const auto l = static_cast<Eigen::Index>(s.l);

  const Eigen::MatrixXd z = preactivations(params, features);
  const Eigen::MatrixXd hidden = activate_matrix(s.activation, z);
  const Eigen::MatrixXd logits = output_layer(params, hidden);

  // dRisk/dlogits = (softmax - onehot) / m; risk uses the same stabilised log-sum-exp.
  Eigen::MatrixXd dlogits = softmax_rows(logits);
  double risk = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
    risk += loss(logits.row(i).transpose(), static_cast<std::size_t>(y));
    dlogits(i, y) -= 1.0;
  }
  dlogits *= inv_m;

  RiskGradient out{risk * inv_m, NetworkParams(s)};
  Eigen::MatrixXd& g = out.gradient.theta();

  Eigen::MatrixXd dhidden;
  if (s.mode == SecondLayer::Trainable) {
    const auto off = static_cast<Eigen::Index>(s.second_layer_offset());
    const auto c = params.theta().middleRows(off, l);
    g.middleRows(off, l).noalias() = (dlogits.transpose() * hidden) * inv_n;
    dhidden.noalias() = (dlogits * c) * inv_n;
  } else {
    const Eigen::VectorXd row_sum = dlogits.rowwise().sum() * inv_n;
    dhidden = row_sum.replicate(1, static_cast<Eigen::Index>(s.n));
  }

  const Eigen::MatrixXd dz = dhidden.cwiseProduct(activate_derivative_matrix(s.activation, z));
  g.topRows(d).noalias() = features.transpose() * dz;
  if (s.bias) g.row(d) = dz.colwise().sum();
  return out;
}

}  // namespace htsgd
