#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "htsgd/dataset.hpp"
#include "htsgd/network.hpp"
#include "htsgd/stable.hpp"

namespace htsgd::sde {

/// Drift b(theta_i, mu^n) evaluated for every particle at once. `state` is
/// p x n (one particle per column); `out` must be filled with the same shape.
struct Drift {
  std::string name;
  bool measure_dependent = false;
  std::function<void(const Eigen::MatrixXd& state, Eigen::MatrixXd& out)> eval;
};

Drift zero_drift();
Drift constant_drift(Eigen::VectorXd c);
/// b(theta) = -rate * theta; no interaction.
Drift linear_drift(double rate = 1.0);
/// b(theta, mu) = -rate * theta + coupling * (E_mu[s(theta')] - 1/2), with s
/// the logistic function applied coordinate-wise. Interaction enters only
/// through the empirical mean of s, so one evaluation is O(n p).
Drift mean_field_logistic_drift(double rate = 1.0, double coupling = 2.0);
/// Mean-field network drift b(theta_i, mu^n) = -n * d R / d theta_i over the
/// full `data` set. Each particle is one unit column of the given shape; the
/// unit count follows the state's column count.
Drift network_drift(NetworkShape shape, Dataset data);

/// Unit-scale alpha-stable Levy paths for n particles in R^p on a uniform fine
/// grid. Increments of particle i come from stream (derive_seed(seed, "levy"), i)
/// in time order; levels are their running sums, so the path seen on any
/// coarser grid is an exact sub-sequence of the fine one.
class NoisePath {
 public:
  static NoisePath generate(const StableSpec& spec, std::size_t n, std::size_t p, double eta_fine, std::size_t steps,
                            std::uint64_t seed);

  std::size_t particles() const { return n_; }
  std::size_t dim() const { return p_; }
  std::size_t steps() const { return increments_.size(); }
  double eta_fine() const { return eta_fine_; }
  std::uint64_t seed() const { return seed_; }
  const StableSpec& spec() const { return spec_; }

  /// Fine increment over [k, k+1) (p x n).
  const Eigen::MatrixXd& increment(std::size_t k) const { return increments_.at(k); }
  /// L at fine time k * eta_fine, k in [0, steps]; level(0) is zero.
  const Eigen::MatrixXd& level(std::size_t k) const { return levels_.at(k); }
  /// Sum of fine increments over [k0, k1), accumulated left to right.
  Eigen::MatrixXd coarse_increment(std::size_t k0, std::size_t k1) const;
  /// The same path restricted to particles 0..n-1.
  NoisePath restrict(std::size_t n) const;

 private:
  StableSpec spec_{};
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  double eta_fine_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<Eigen::MatrixXd> increments_;
  std::vector<Eigen::MatrixXd> levels_;
};

/// n interacting particles dtheta = b(theta, mu^n) dt + sigma dL.
struct ParticleSystem {
  Eigen::MatrixXd state;  ///< p x n
  double t = 0.0;
  Drift drift;
  StableSpec noise;  ///< sigma multiplies the unit-scale path
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> states;  ///< states[k] at times[k], including t0
};

/// Called after every Euler step with (step index k >= 1, time, state).
using StepVisitor = std::function<void(std::size_t, double, const Eigen::MatrixXd&)>;

/// Euler scheme theta_{k+1} = theta_k + eta * b(theta_k, mu_k) + sigma * (L_{(k+1)eta} - L_{k eta})
/// driven by `path`. eta must be an integer multiple of the path's fine step
/// and T a multiple of eta. Evaluated as theta_0 + (accumulated drift) +
/// sigma * L_t, which is algebraically the same recursion and makes the
/// zero-drift solution bit-identical across step sizes.
Trajectory euler_simulate(const ParticleSystem& system, double eta, double T, const NoisePath& path);
/// Same scheme without storing the trajectory; returns the terminal state.
Eigen::MatrixXd euler_simulate(const ParticleSystem& system, double eta, double T, const NoisePath& path,
                               const StepVisitor& visitor);
/// Euler scheme with noise drawn on the fly (stream layout identical to
/// NoisePath::generate at eta_fine = eta). For systems too large to store a path.
Eigen::MatrixXd euler_simulate_streaming(const ParticleSystem& system, double eta, double T, std::uint64_t seed);

/// Initial particle states: N(0, scale^2) entries, particle i from stream
/// (derive_seed(seed, "particle-init"), i), so particle i is the same for every n.
Eigen::MatrixXd initial_states(std::size_t n, std::size_t p, double scale, std::uint64_t seed);

}  // namespace htsgd::sde
