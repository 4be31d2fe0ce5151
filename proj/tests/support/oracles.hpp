#pragma once

// Independent reference computations used only by tests. None of these call
// into the library's numerical code.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "htsgd/network.hpp"

namespace oracle {

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Logits by explicit loops over units, straight from the definition.
std::vector<double> brute_forward(const htsgd::NetworkParams& params, const std::vector<double>& x);

/// Cross-entropy evaluated in long double via log-sum-exp.
long double long_double_loss(const std::vector<double>& logits, std::size_t y);

/// Batch-average risk by brute force, long double accumulation.
long double brute_risk(const htsgd::NetworkParams& params, const Eigen::MatrixXd& features,
                       const std::vector<int>& labels);

/// Central finite differences of brute_risk in every parameter entry.
Eigen::MatrixXd finite_difference_gradient(const htsgd::NetworkParams& params, const Eigen::MatrixXd& features,
                                           const std::vector<int>& labels, double h = 1e-6);

/// Pareto(index a, scale 1) samples from std::mt19937_64 by inversion.
std::vector<double> pareto(double a, std::size_t count, std::uint64_t seed);

/// Minimal IDX reader: returns the payload bytes after the header, checking nothing but sizes.
std::vector<unsigned char> idx_payload(const std::filesystem::path& path, std::vector<std::uint32_t>& dims);

/// Writes an IDX file with the given magic and dimensions.
void write_idx(const std::filesystem::path& path, std::uint32_t magic, const std::vector<std::uint32_t>& dims,
               const std::vector<unsigned char>& payload);

/// Quantile by sorting (linear interpolation, type 7).
double quantile(std::vector<double> xs, double q);

/// Least-squares slope of log y on log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Fresh empty directory under the system temp dir, removed at process exit.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace oracle
