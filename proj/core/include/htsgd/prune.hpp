#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "htsgd/dataset.hpp"
#include "htsgd/network.hpp"

namespace htsgd {

/// Outcome of keeping the floor(kappa * n) largest-norm columns of Theta.
struct PruneReport {
  double kappa = 1.0;
  std::vector<std::size_t> kept;  ///< ascending unit indices
  double rel_error = 0.0;         ///< ||Theta_pruned - Theta||_F / ||Theta||_F
  double pruning_ratio = 0.0;     ///< percent of columns zeroed
};

/// Euclidean norm of every unit column (w, b and, in trainable mode, c).
Eigen::VectorXd column_norms(const NetworkParams& params);

/// Number of columns kept at ratio kappa: floor(kappa * n), robust to the
/// representation error of kappa values computed as 1 - m/n.
std::size_t kept_count(double kappa, std::size_t n);

/// Unit indices ordered by decreasing norm; equal norms keep the smaller index first.
std::vector<std::size_t> norm_order(const Eigen::VectorXd& norms);

/// Zeroes every column outside the floor(kappa*n) largest norms (c included,
/// so pruned units contribute nothing to the output). kappa in (0, 1].
std::pair<NetworkParams, PruneReport> prune_topk(const NetworkParams& params, double kappa);

/// Largest percentage of columns (smallest norms first) that can be zeroed
/// while the relative compression error stays <= epsilon. Exact scan of the
/// cumulative squared-norm tail. Throws DegenerateInputError for an all-zero
/// matrix and DomainError unless 0 < epsilon < 1.
double pruning_ratio(const NetworkParams& params, double epsilon = 0.1);

/// Best k-term approximation error: the Euclidean norm of x with its k
/// largest-magnitude entries removed.
double kterm_error(std::span<const double> x, std::size_t k);

/// Fraction of ||Theta||_F^2 carried by the top `fraction` of columns by norm.
double top_norm_share(const NetworkParams& params, double fraction);

struct KeepRatio {
  double kappa;
};
struct RemovePercent {
  double percent;
};
using PruneAmount = std::variant<KeepRatio, RemovePercent>;

struct PrunedAccuracy {
  double train_acc = 0.0;
  double test_acc = 0.0;
};

/// Accuracies of the network pruned by `amount` (a kept ratio or the
/// percentage of columns to remove, e.g. the output of pruning_ratio).
PrunedAccuracy evaluate_pruned(const NetworkParams& params, const Dataset& train_set, const Dataset& test_set,
                               PruneAmount amount);

}  // namespace htsgd
