#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htsgd/dataset.hpp"
#include "htsgd/network.hpp"
#include "htsgd/random_stream.hpp"
#include "htsgd/stable.hpp"

namespace htsgd {

enum class InitDistribution { Gaussian, Uniform };

/// Initial law mu_0. Gaussian draws N(0, scale^2) per entry; Uniform draws
/// U(-scale, scale). `scale` defaults to 1/sqrt(d) for first-layer weights and
/// bias; second-layer weights use `second_layer_scale` so that c_i is O(1).
struct InitSpec {
  InitDistribution distribution = InitDistribution::Gaussian;
  std::optional<double> scale;
  double second_layer_scale = 1.0;
};

struct TrainConfig {
  double eta = 1e-3;
  std::size_t batch_size = 1;
  std::size_t epochs = 1;
  StableSpec noise{};  ///< sigma == 0 is vanilla SGD
  std::uint64_t seed = 0;
  SecondLayer second_layer = SecondLayer::Trainable;
  Activation activation = Activation::ReLU;
  bool bias = true;
  InitSpec init{};
  /// Inject noise into the second-layer block as well (trainable mode only).
  bool noise_on_second_layer = true;
  std::optional<double> target_train_acc;
  /// Test accuracy is evaluated every `eval_every` epochs and at the last epoch.
  std::size_t eval_every = 1;
  /// Write a checkpoint every `checkpoint_every` epochs into `checkpoint_dir` (0 = never).
  std::size_t checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;     ///< 1-based
  double train_loss = 0.0;   ///< size-weighted mean minibatch risk during the epoch
  double train_acc = 0.0;    ///< full training set, end of epoch
  double test_acc = 0.0;     ///< NaN when not evaluated this epoch
};

struct TrainState {
  NetworkParams params;
  std::uint64_t k = 0;
  std::vector<RandomStream> streams;  ///< stream i feeds unit i's noise only
  std::vector<EpochRecord> history;
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochRecord> history;
  std::uint64_t steps = 0;
  bool early_stopped = false;
  std::vector<std::string> warnings;
};

/// Units drawn i.i.d. from the InitSpec, k = 0, noise stream i = (derive_seed(seed, "noise"), i).
TrainState init_state(const TrainConfig& config, std::size_t n, std::size_t d, std::size_t l);

/// Number of leading rows of each column that receive noise.
std::size_t noise_dim(const NetworkShape& shape, bool noise_on_second_layer);

/// One perturbed step: theta_i <- theta_i - eta*n*g_i + sigma*eta^{1/alpha}*X_i.
/// The state is left untouched if the update is non-finite; DivergedError then
/// carries the iteration index and the current (finite) parameters.
/// Returns the batch risk before the update.
double step(TrainState& state, const Eigen::MatrixXd& features, std::span<const int> labels, const TrainConfig& config);

using EpochObserver = std::function<void(const EpochRecord&, const NetworkParams&)>;

/// Shuffled minibatch training for `config.epochs` epochs (or until
/// target_train_acc is reached). The epoch-e batch order is a function of
/// (seed, e) only.
TrainResult train(const TrainConfig& config, std::size_t n, const Dataset& train_set, const Dataset& test_set,
                  const EpochObserver& observer = {});

}  // namespace htsgd
