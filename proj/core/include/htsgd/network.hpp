#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace htsgd {

enum class Activation { ReLU, Sigmoid, Tanh };
/// Fixed: every unit's second-layer weight is the constant 1/n (never trained).
/// Trainable: per-unit second-layer weights c_i, output scaled by 1/n.
enum class SecondLayer { Fixed, Trainable };

std::string_view to_string(Activation a);
std::string_view to_string(SecondLayer m);
Activation parse_activation(std::string_view text);
SecondLayer parse_second_layer(std::string_view text);

double activate(Activation a, double z);
/// Derivative of the activation; ReLU'(0) is 0.
double activate_derivative(Activation a, double z);

struct NetworkShape {
  std::size_t n = 1;  ///< hidden units
  std::size_t d = 1;  ///< feature dimension
  std::size_t l = 1;  ///< outputs / classes
  bool bias = true;
  SecondLayer mode = SecondLayer::Trainable;
  Activation activation = Activation::ReLU;

  /// Per-unit parameter dimension p = d (+1 bias) (+l in trainable mode).
  std::size_t unit_dim() const { return d + (bias ? 1 : 0) + (mode == SecondLayer::Trainable ? l : 0); }
  /// Row offset of the second-layer block inside a column (trainable mode only).
  std::size_t second_layer_offset() const { return d + (bias ? 1 : 0); }
  void validate() const;
  bool operator==(const NetworkShape&) const = default;
};

/// One hidden unit: first-layer weights w, bias b, second-layer weights c.
struct UnitParams {
  Eigen::VectorXd w;
  double b = 0.0;
  Eigen::VectorXd c;
};

/// The parameter matrix Theta (p x n): column i is unit i, laid out as
/// [w_i (d rows); b_i (1 row, if bias); c_i (l rows, trainable mode only)].
class NetworkParams {
 public:
  NetworkParams() = default;
  /// Zero-initialised parameters of the given shape.
  explicit NetworkParams(const NetworkShape& shape);
  NetworkParams(const NetworkShape& shape, Eigen::MatrixXd theta);

  const NetworkShape& shape() const { return shape_; }
  std::size_t n() const { return shape_.n; }

  const Eigen::MatrixXd& theta() const { return theta_; }
  Eigen::MatrixXd& theta() { return theta_; }

  auto weights() const { return theta_.topRows(static_cast<Eigen::Index>(shape_.d)); }
  auto weights() { return theta_.topRows(static_cast<Eigen::Index>(shape_.d)); }

  /// Unit i, materialised. In fixed mode c is the constant vector 1/n.
  UnitParams unit(std::size_t i) const;
  void set_unit(std::size_t i, const UnitParams& u);

  bool all_finite() const { return theta_.allFinite(); }

 private:
  NetworkShape shape_;
  Eigen::MatrixXd theta_;
};

/// c * a(<w, x> + b).
Eigen::VectorXd unit_output(const UnitParams& u, Activation activation, const Eigen::VectorXd& x);

/// Network logits for a single feature vector.
Eigen::VectorXd forward(const NetworkParams& params, const Eigen::VectorXd& x);
/// Logits for every row of `features` (m x d); result is m x l.
Eigen::MatrixXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& features);

/// Row-wise softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);
/// Cross-entropy of softmax(logits) against label y; always >= 0.
double loss(const Eigen::VectorXd& logits, std::size_t y);

/// Index of the largest logit; ties go to the smallest index.
std::size_t predict(const Eigen::VectorXd& logits);
/// Fraction of rows whose argmax equals the label.
double accuracy(const NetworkParams& params, const Eigen::MatrixXd& features, std::span<const int> labels);
/// Mean cross-entropy over rows.
double mean_loss(const NetworkParams& params, const Eigen::MatrixXd& features, std::span<const int> labels);

struct RiskGradient {
  double risk = 0.0;      ///< batch-average cross-entropy
  NetworkParams gradient; ///< d risk / d theta, same shape as the parameters
};

/// Analytic gradient of the batch-average cross-entropy w.r.t. every unit
/// parameter. In fixed mode the second-layer block does not exist and is not
/// differentiated. The mean-field drift of unit i is -n * gradient column i.
RiskGradient grad_risk(const NetworkParams& params, const Eigen::MatrixXd& features, std::span<const int> labels);

}  // namespace htsgd
