#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "htsgd/sde.hpp"

namespace htsgd::sde {

struct RateRow {
  double x = 0.0;      ///< independent variable (eta or n)
  double value = 0.0;  ///< median (or mean, see RateTable::statistic)
  double iqr = 0.0;
};

struct RateTable {
  std::string x_name;
  std::string statistic = "median";
  std::vector<RateRow> rows;
  double slope = 0.0;  ///< least-squares slope of log(value) on log(x); NaN if undefined
  std::string note;

  /// CSV columns: <x_name>,<statistic>,iqr,slope.
  void write_csv(const std::filesystem::path& path) const;
  /// Tab-separated log(x), log(value) pairs (rows with value <= 0 are skipped).
  void write_plot_tsv(const std::filesystem::path& path) const;
  /// True if `value` strictly decreases along the rows.
  bool strictly_decreasing() const;
};

/// Strong error of the Euler scheme against a coupled fine-grid reference.
struct EulerErrorConfig {
  Drift drift;
  StableSpec noise{1.75, VectorType::TypeIII, 1.0};
  std::size_t n = 8;
  std::size_t p = 1;
  double T = 1.0;
  std::vector<double> etas;
  double eta_ref = 0x1p-12;
  std::size_t trials = 50;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
};
/// Per trial: one path on the eta_ref grid; error(eta) = max_i |theta_T^eta - theta_T^ref|.
/// Rows are sorted by decreasing eta; the slope is d log(error) / d log(eta).
RateTable euler_error_experiment(const EulerErrorConfig& config);

/// Coupled n-particle systems against an N_ref-particle proxy of the mean-field limit.
struct PocConfig {
  Drift drift;
  StableSpec noise{1.75, VectorType::TypeIII, 1.0};
  std::vector<std::size_t> ns;
  std::size_t n_ref = 4096;
  std::size_t p = 1;
  double T = 1.0;
  double eta = 0x1p-6;
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
};
/// error(n) = sup over grid times and particles i <= n of |theta^{i,n} - theta^{i,N_ref}|.
RateTable poc_experiment(const PocConfig& config);

/// Median relative best-(floor(kappa n))-term error of i.i.d. symmetric stable sequences.
RateTable iid_compressibility_experiment(double alpha, std::span<const std::size_t> ns, double kappa,
                                         std::size_t trials, std::uint64_t seed = 0);

/// Monte Carlo mean of max_i |X_i| over n i.i.d. symmetric stable scalars.
RateTable max_stable_scaling(double alpha, std::span<const std::size_t> ns, std::size_t trials,
                             std::uint64_t seed = 0);

/// Hill estimator k / sum_{j<=k} ln(x_(j) / x_(k+1)) over the k largest samples.
/// Throws DomainError when k == 0, when fewer than k+1 positive samples exist,
/// or when the top order statistics coincide.
double hill_tail_index(std::span<const double> samples, std::size_t k);

struct TailProbeConfig {
  Drift drift;
  StableSpec noise{1.5, VectorType::TypeIII, 1.0};
  std::size_t p = 2;
  double t = 1.0;
  double eta = 0.0;  ///< Euler step; 0 means a single step of length t
  std::size_t replicas = 100000;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  double hill_fraction = 0.01;  ///< k = max(10, hill_fraction * replicas)
};

struct TailProbeReport {
  double hill_index = 0.0;
  std::size_t hill_k = 0;
  double dominance_ratio = 0.0;      ///< max |theta|^2 / sum |theta|^2
  double dominance_threshold = 0.0;  ///< replicas^{-1/2}
  /// (replica count, running empirical second moment) at doubling counts.
  std::vector<std::pair<std::size_t, double>> running_second_moment;

  bool heavy_tailed() const { return hill_index < 2.0 && dominance_ratio > dominance_threshold; }
};

/// Simulates `replicas` particles to time t and inspects the tails of |theta_t|.
/// With a measure-dependent drift the replicas form one large interacting
/// system, which serves as the mean-field proxy.
TailProbeReport second_moment_divergence_probe(const TailProbeConfig& config);

}  // namespace htsgd::sde
