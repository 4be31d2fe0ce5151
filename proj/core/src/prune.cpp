#include "htsgd/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "htsgd/errors.hpp"

namespace htsgd {

namespace {

// Squared norms of the columns removed when keeping the first `keep` entries
// of `order`, summed smallest first; paired with the total summed the same way.
std::pair<double, double> removed_and_total(const Eigen::VectorXd& sq, const std::vector<std::size_t>& order,
                                            std::size_t keep) {
  double removed = 0.0;
  double total = 0.0;
  for (std::size_t r = order.size(); r-- > 0;) {
    const double v = sq(static_cast<Eigen::Index>(order[r]));
    total += v;
    if (r >= keep) removed = total;
  }
  return {removed, total};
}

std::pair<NetworkParams, PruneReport> prune_keep(const NetworkParams& params, std::size_t keep, double kappa) {
  const Eigen::VectorXd sq = params.theta().colwise().squaredNorm().transpose();
  const auto order = norm_order(sq);
  const auto [removed, total] = removed_and_total(sq, order, keep);

  PruneReport report;
  report.kappa = kappa;
  report.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  std::sort(report.kept.begin(), report.kept.end());
  report.rel_error = total > 0.0 ? std::sqrt(removed / total) : 0.0;
  report.pruning_ratio = 100.0 * static_cast<double>(params.n() - keep) / static_cast<double>(params.n());

  NetworkParams pruned = params;
  for (std::size_t r = keep; r < order.size(); ++r) pruned.theta().col(static_cast<Eigen::Index>(order[r])).setZero();
  return {std::move(pruned), std::move(report)};
}

}  // namespace

Eigen::VectorXd column_norms(const NetworkParams& params) {
  return params.theta().colwise().norm().transpose();
}

std::size_t kept_count(double kappa, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::floor(kappa * static_cast<double>(n) + 1e-9));
  return std::min(k, n);
}

std::vector<std::size_t> norm_order(const Eigen::VectorXd& norms) {
  std::vector<std::size_t> order(static_cast<std::size_t>(norms.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&norms](std::size_t a, std::size_t b) {
    return norms(static_cast<Eigen::Index>(a)) > norms(static_cast<Eigen::Index>(b));
  });
  return order;
}

std::pair<NetworkParams, PruneReport> prune_topk(const NetworkParams& params, double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw DomainError("kappa must lie in (0, 1], got " + std::to_string(kappa));
  return prune_keep(params, kept_count(kappa, params.n()), kappa);
}

double pruning_ratio(const NetworkParams& params, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  const Eigen::VectorXd sq = params.theta().colwise().squaredNorm().transpose();
  const auto order = norm_order(sq);
  const auto [unused, total] = removed_and_total(sq, order, order.size());
  if (!(total > 0.0)) throw DegenerateInputError("pruning ratio is undefined for an all-zero parameter matrix");

  // Remove columns smallest-first while the residual stays within epsilon.
  std::size_t removable = 0;
  double removed = 0.0;
  for (std::size_t r = order.size(); r-- > 0;) {
    removed += sq(static_cast<Eigen::Index>(order[r]));
    if (std::sqrt(removed / total) > epsilon) break;
    ++removable;
  }
  return 100.0 * static_cast<double>(removable) / static_cast<double>(params.n());
}

double kterm_error(std::span<const double> x, std::size_t k) {
  if (k > x.size()) throw DomainError("k exceeds vector length");
  std::vector<double> mags(x.size());
  std::transform(x.begin(), x.end(), mags.begin(), [](double v) { return std::abs(v); });
  std::sort(mags.begin(), mags.end());
  double tail = 0.0;
  for (std::size_t i = 0; i + k < mags.size(); ++i) tail += mags[i] * mags[i];
  return std::sqrt(tail);
}

double top_norm_share(const NetworkParams& params, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("fraction must lie in (0, 1]");
  const Eigen::VectorXd sq = params.theta().colwise().squaredNorm().transpose();
  const auto order = norm_order(sq);
  const auto keep = kept_count(fraction, params.n());
  const auto [removed, total] = removed_and_total(sq, order, keep);
  if (!(total > 0.0)) throw DegenerateInputError("norm share is undefined for an all-zero parameter matrix");
  return (total - removed) / total;
}

PrunedAccuracy evaluate_pruned(const NetworkParams& params, const Dataset& train_set, const Dataset& test_set,
                               PruneAmount amount) {
  const std::size_t n = params.n();
  std::size_t keep = n;
  double kappa = 1.0;
  if (const auto* k = std::get_if<KeepRatio>(&amount)) {
    if (!(k->kappa >= 0.0 && k->kappa <= 1.0)) throw DomainError("kappa must lie in [0, 1]");
    keep = kept_count(k->kappa, n);
    kappa = k->kappa;
  } else {
    const double pct = std::get<RemovePercent>(amount).percent;
    if (!(pct >= 0.0 && pct <= 100.0)) throw DomainError("prune percentage must lie in [0, 100]");
    const auto removed = static_cast<std::size_t>(std::llround(pct * static_cast<double>(n) / 100.0));
    keep = n - std::min(removed, n);
    kappa = static_cast<double>(keep) / static_cast<double>(n);
  }
  const auto pruned = prune_keep(params, keep, kappa).first;
  return {accuracy(pruned, train_set.features, train_set.labels),
          accuracy(pruned, test_set.features, test_set.labels)};
}

}  // namespace htsgd
