#include "htsgd/sde.hpp"

#include <cmath>
#include <span>
#include <string>

#include "htsgd/errors.hpp"
#include "htsgd/random_stream.hpp"

namespace htsgd::sde {

namespace {

std::size_t exact_ratio(double numerator, double denominator, const char* what) {
  const double r = numerator / denominator;
  const double rounded = std::round(r);
  if (!(rounded >= 1.0) || std::abs(r - rounded) > 1e-9 * rounded) {
    throw DomainError(std::string(what) + " must be a positive integer multiple");
  }
  return static_cast<std::size_t>(rounded);
}

void check_finite(const Eigen::MatrixXd& state, std::size_t k) {
  if (!state.allFinite()) throw DivergedError(k);
}

void check_system(const ParticleSystem& system) {
  if (!system.drift.eval) throw DomainError("particle system has no drift");
  system.noise.validate();
  if (system.state.cols() == 0 || system.state.rows() == 0) throw DomainError("particle system is empty");
  if (!system.state.allFinite()) throw DomainError("initial particle state is not finite");
}

}  // namespace

Drift zero_drift() {
  return {"zero", false, [](const Eigen::MatrixXd& state, Eigen::MatrixXd& out) {
            out.setZero(state.rows(), state.cols());
          }};
}

Drift constant_drift(Eigen::VectorXd c) {
  return {"constant", false, [c = std::move(c)](const Eigen::MatrixXd& state, Eigen::MatrixXd& out) {
            if (c.size() != state.rows()) throw DomainError("constant drift dimension mismatch");
            out = c.replicate(1, state.cols());
          }};
}

Drift linear_drift(double rate) {
  return {"linear", false, [rate](const Eigen::MatrixXd& state, Eigen::MatrixXd& out) { out = -rate * state; }};
}

Drift mean_field_logistic_drift(double rate, double coupling) {
  return {"mean-field-logistic", true, [rate, coupling](const Eigen::MatrixXd& state, Eigen::MatrixXd& out) {
            const Eigen::VectorXd field =
                state.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }).rowwise().mean().array() - 0.5;
            out = -rate * state;
            out.colwise() += coupling * field;
          }};
}

Drift network_drift(NetworkShape shape, Dataset data) {
  data.validate();
  if (data.dim() != shape.d) throw DomainError("network drift: data dimension does not match d");
  return {"mean-field-network", true,
          [shape, data = std::move(data)](const Eigen::MatrixXd& state, Eigen::MatrixXd& out) {
            NetworkShape s = shape;
            s.n = static_cast<std::size_t>(state.cols());
            const NetworkParams params(s, state);
            out = -static_cast<double>(s.n) * grad_risk(params, data.features, data.labels).gradient.theta();
          }};
}

NoisePath NoisePath::generate(const StableSpec& spec, std::size_t n, std::size_t p, double eta_fine, std::size_t steps,
                              std::uint64_t seed) {
  spec.validate();
  if (n == 0 || p == 0) throw DomainError("noise path needs n, p >= 1");
  if (!(eta_fine > 0.0)) throw DomainError("noise path step must be > 0");
  NoisePath path;
  path.spec_ = spec;
  path.n_ = n;
  path.p_ = p;
  path.eta_fine_ = eta_fine;
  path.seed_ = seed;
  const auto rows = static_cast<Eigen::Index>(p);
  const auto cols = static_cast<Eigen::Index>(n);
  path.increments_.assign(steps, Eigen::MatrixXd(rows, cols));
  const std::uint64_t levy_seed = derive_seed(seed, "levy");
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream stream(levy_seed, i);
    for (std::size_t k = 0; k < steps; ++k) {
      levy_increment(spec, eta_fine, std::span<double>(path.increments_[k].col(static_cast<Eigen::Index>(i)).data(), p),
                     stream);
    }
  }
  path.levels_.reserve(steps + 1);
  path.levels_.push_back(Eigen::MatrixXd::Zero(rows, cols));
  for (std::size_t k = 0; k < steps; ++k) path.levels_.push_back(path.levels_.back() + path.increments_[k]);
  return path;
}

Eigen::MatrixXd NoisePath::coarse_increment(std::size_t k0, std::size_t k1) const {
  if (k0 > k1 || k1 > steps()) throw DomainError("coarse increment range outside the path");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(n_));
  for (std::size_t k = k0; k < k1; ++k) sum += increments_[k];
  return sum;
}

NoisePath NoisePath::restrict(std::size_t n) const {
  if (n == 0 || n > n_) throw DomainError("cannot restrict noise path to " + std::to_string(n) + " particles");
  NoisePath out;
  out.spec_ = spec_;
  out.n_ = n;
  out.p_ = p_;
  out.eta_fine_ = eta_fine_;
  out.seed_ = seed_;
  out.increments_.reserve(increments_.size());
  for (const auto& m : increments_) out.increments_.push_back(m.leftCols(static_cast<Eigen::Index>(n)));
  out.levels_.reserve(levels_.size());
  for (const auto& m : levels_) out.levels_.push_back(m.leftCols(static_cast<Eigen::Index>(n)));
  return out;
}

Eigen::MatrixXd euler_simulate(const ParticleSystem& system, double eta, double T, const NoisePath& path,
                               const StepVisitor& visitor) {
  check_system(system);
  if (!(eta > 0.0) || !(T > 0.0)) throw DomainError("Euler step and horizon must be > 0");
  const std::size_t ratio = exact_ratio(eta, path.eta_fine(), "eta / path step");
  const std::size_t steps = exact_ratio(T, eta, "T / eta");
  if (steps * ratio > path.steps()) throw DomainError("noise path does not cover [0, T]");
  if (static_cast<std::size_t>(system.state.cols()) != path.particles() ||
      static_cast<std::size_t>(system.state.rows()) != path.dim()) {
    throw DomainError("noise path shape does not match the particle system");
  }

  const double sigma = system.noise.sigma;
  const Eigen::MatrixXd& theta0 = system.state;
  Eigen::MatrixXd drift_sum = Eigen::MatrixXd::Zero(theta0.rows(), theta0.cols());
  Eigen::MatrixXd theta = theta0;
  Eigen::MatrixXd b(theta0.rows(), theta0.cols());
  for (std::size_t k = 0; k < steps; ++k) {
    system.drift.eval(theta, b);
    drift_sum += eta * b;
    theta = theta0 + drift_sum + sigma * path.level((k + 1) * ratio);
    check_finite(theta, k + 1);
    if (visitor) visitor(k + 1, system.t + static_cast<double>(k + 1) * eta, theta);
  }
  return theta;
}

Trajectory euler_simulate(const ParticleSystem& system, double eta, double T, const NoisePath& path) {
  Trajectory traj;
  traj.times.push_back(system.t);
  traj.states.push_back(system.state);
  euler_simulate(system, eta, T, path, [&traj](std::size_t, double t, const Eigen::MatrixXd& state) {
    traj.times.push_back(t);
    traj.states.push_back(state);
  });
  return traj;
}

Eigen::MatrixXd euler_simulate_streaming(const ParticleSystem& system, double eta, double T, std::uint64_t seed) {
  check_system(system);
  if (!(eta > 0.0) || !(T > 0.0)) throw DomainError("Euler step and horizon must be > 0");
  const std::size_t steps = exact_ratio(T, eta, "T / eta");
  const auto p = static_cast<std::size_t>(system.state.rows());
  const auto n = static_cast<std::size_t>(system.state.cols());
  const std::uint64_t levy_seed = derive_seed(seed, "levy");
  std::vector<RandomStream> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.emplace_back(levy_seed, i);

  const double sigma = system.noise.sigma;
  const Eigen::MatrixXd& theta0 = system.state;
  Eigen::MatrixXd drift_sum = Eigen::MatrixXd::Zero(theta0.rows(), theta0.cols());
  Eigen::MatrixXd level = Eigen::MatrixXd::Zero(theta0.rows(), theta0.cols());
  Eigen::MatrixXd inc(theta0.rows(), theta0.cols());
  Eigen::MatrixXd theta = theta0;
  Eigen::MatrixXd b(theta0.rows(), theta0.cols());
  for (std::size_t k = 0; k < steps; ++k) {
    system.drift.eval(theta, b);
    drift_sum += eta * b;
    for (std::size_t i = 0; i < n; ++i) {
      levy_increment(system.noise, eta, std::span<double>(inc.col(static_cast<Eigen::Index>(i)).data(), p), streams[i]);
    }
    level += inc;
    theta = theta0 + drift_sum + sigma * level;
    check_finite(theta, k + 1);
  }
  return theta;
}

Eigen::MatrixXd initial_states(std::size_t n, std::size_t p, double scale, std::uint64_t seed) {
  if (n == 0 || p == 0) throw DomainError("initial states need n, p >= 1");
  if (!(scale >= 0.0)) throw DomainError("initial scale must be >= 0");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n));
  const std::uint64_t init_seed = derive_seed(seed, "particle-init");
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream stream(init_seed, i);
    for (std::size_t r = 0; r < p; ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = scale * stream.next_normal();
    }
  }
  return out;
}

}  // namespace htsgd::sde
