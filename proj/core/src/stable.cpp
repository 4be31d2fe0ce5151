#include "htsgd/stable.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "htsgd/errors.hpp"

namespace htsgd {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw DomainError("stability index alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
}

// V ~ U(-pi/2, pi/2), open on both ends.
double draw_angle(RandomStream& stream) {
  return std::numbers::pi * (stream.next_open_uniform() - 0.5);
}

}  // namespace

std::string_view to_string(VectorType t) {
  switch (t) {
    case VectorType::TypeI:
      return "I";
    case VectorType::TypeII:
      return "II";
    case VectorType::TypeIII:
      return "III";
  }
  return "?";
}

VectorType parse_vector_type(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (c != '-' && c != '_' && c != ' ') s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  if (s.starts_with("TYPE")) s.erase(0, 4);
  if (s == "I" || s == "1") return VectorType::TypeI;
  if (s == "II" || s == "2") return VectorType::TypeII;
  if (s == "III" || s == "3") return VectorType::TypeIII;
  throw DomainError("unknown stable vector type '" + std::string(text) + "' (expected I, II or III)");
}

void StableSpec::validate() const {
  check_alpha(alpha);
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw DomainError("noise level sigma must be finite and >= 0");
  }
}

double sample_scalar(double alpha, RandomStream& stream) {
  check_alpha(alpha);
  if (alpha == 2.0) return std::numbers::sqrt2 * stream.next_normal();
  const double v = draw_angle(stream);
  if (alpha == 1.0) return std::tan(v);
  const double w = stream.next_exponential();
  const double a_v = alpha * v;
  return std::sin(a_v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - a_v) / w, (1.0 - alpha) / alpha);
}

double sample_positive_stable(double a, RandomStream& stream) {
  if (!(a > 0.0 && a <= 1.0)) {
    throw DomainError("positive stable index must lie in (0, 1], got " + std::to_string(a));
  }
  if (a == 1.0) return 1.0;
  const double v = draw_angle(stream);
  const double w = stream.next_exponential();
  const double shifted = a * (v + kHalfPi);
  return std::sin(shifted) / std::pow(std::cos(v), 1.0 / a) *
         std::pow(std::cos(v - shifted) / w, (1.0 - a) / a);
}

void sample_vector(const StableSpec& spec, std::span<double> out, RandomStream& stream) {
  check_alpha(spec.alpha);
  if (out.empty()) throw DomainError("stable vector dimension must be >= 1");
  switch (spec.vtype) {
    case VectorType::TypeI: {
      std::fill(out.begin(), out.end(), sample_scalar(spec.alpha, stream));
      break;
    }
    case VectorType::TypeII: {
      for (double& x : out) x = sample_scalar(spec.alpha, stream);
      break;
    }
    case VectorType::TypeIII: {
      // Sub-Gaussian: sqrt(A) * G with G ~ N(0, 2 I) and E exp(-sA) = exp(-s^{alpha/2}).
      const double scale = std::sqrt(sample_positive_stable(spec.alpha / 2.0, stream)) * std::numbers::sqrt2;
      for (double& x : out) x = scale * stream.next_normal();
      break;
    }
  }
}

Eigen::VectorXd sample_vector(const StableSpec& spec, std::size_t dim, RandomStream& stream) {
  if (dim == 0) throw DomainError("stable vector dimension must be >= 1");
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim));
  sample_vector(spec, std::span<double>(out.data(), dim), stream);
  return out;
}

void levy_increment(const StableSpec& spec, double dt, std::span<double> out, RandomStream& stream) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("Levy increment step dt must be > 0");
  sample_vector(spec, out, stream);
  const double scale = std::pow(dt, 1.0 / spec.alpha);
  for (double& x : out) x *= scale;
}

Eigen::VectorXd levy_increment(const StableSpec& spec, std::size_t dim, double dt, RandomStream& stream) {
  if (dim == 0) throw DomainError("stable vector dimension must be >= 1");
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim));
  levy_increment(spec, dt, std::span<double>(out.data(), dim), stream);
  return out;
}

}  // namespace htsgd
