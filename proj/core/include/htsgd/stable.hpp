#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "htsgd/random_stream.hpp"

namespace htsgd {

/// Multivariate symmetric alpha-stable constructions.
///   TypeI:   X = 1_d * Z            (one scalar replicated)
///   TypeII:  i.i.d. scalar coordinates
///   TypeIII: rotationally invariant, E exp(i<u,X>) = exp(-|u|^alpha)
enum class VectorType { TypeI, TypeII, TypeIII };

std::string_view to_string(VectorType t);
/// Accepts "I", "II", "III", "TypeI", "type-ii", ... (case-insensitive).
VectorType parse_vector_type(std::string_view text);

/// Noise law: stability index alpha in (0, 2], vector type and noise level sigma >= 0.
struct StableSpec {
  double alpha = 2.0;
  VectorType vtype = VectorType::TypeIII;
  double sigma = 0.0;

  /// Throws DomainError if alpha is outside (0, 2] or sigma is negative / non-finite.
  void validate() const;
};

/// One symmetric alpha-stable scalar with characteristic function exp(-|w|^alpha).
///
/// Chambers-Mallows-Stuck transform of V ~ U(-pi/2, pi/2) and W ~ Exp(1).
/// alpha == 1 uses the closed-form Cauchy limit tan(V); alpha == 2 draws a
/// Gaussian of variance 2 directly.
double sample_scalar(double alpha, RandomStream& stream);

/// One positive stable variate A with Laplace transform E exp(-sA) = exp(-s^a),
/// a in (0, 1]. Kanter's (one-sided CMS) representation; a == 1 returns 1.
double sample_positive_stable(double a, RandomStream& stream);

/// Unit-scale stable vector of the requested type written into `out`
/// (sigma is not applied). Throws DomainError for an empty span.
void sample_vector(const StableSpec& spec, std::span<double> out, RandomStream& stream);
Eigen::VectorXd sample_vector(const StableSpec& spec, std::size_t dim, RandomStream& stream);

/// Increment of a unit-scale alpha-stable Levy process over a step of length dt:
/// dt^{1/alpha} * sample_vector(spec, dim, stream).
void levy_increment(const StableSpec& spec, double dt, std::span<double> out, RandomStream& stream);
Eigen::VectorXd levy_increment(const StableSpec& spec, std::size_t dim, double dt, RandomStream& stream);

}  // namespace htsgd
