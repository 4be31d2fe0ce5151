#include "htsgd/trainer.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "htsgd/checkpoint.hpp"
#include "htsgd/errors.hpp"

namespace htsgd {

namespace {

double draw_init(InitDistribution dist, double scale, RandomStream& stream) {
  if (dist == InitDistribution::Gaussian) return scale * stream.next_normal();
  return scale * (2.0 * stream.next_uniform() - 1.0);
}

std::uint64_t epoch_shuffle_seed(std::uint64_t seed, std::size_t epoch) {
  return splitmix64(derive_seed(seed, "shuffle") + epoch);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("step size eta must be > 0");
  if (batch_size == 0) throw DomainError("batch size must be >= 1");
  if (eval_every == 0) throw DomainError("eval_every must be >= 1");
  noise.validate();
  if (init.scale && !(*init.scale > 0.0)) throw DomainError("init scale must be > 0");
  if (!(init.second_layer_scale > 0.0)) throw DomainError("second-layer init scale must be > 0");
  if (target_train_acc && !(*target_train_acc > 0.0 && *target_train_acc <= 1.0)) {
    throw DomainError("target train accuracy must lie in (0, 1]");
  }
}

std::size_t noise_dim(const NetworkShape& shape, bool noise_on_second_layer) {
  if (shape.mode == SecondLayer::Trainable && noise_on_second_layer) return shape.unit_dim();
  return shape.second_layer_offset();
}

TrainState init_state(const TrainConfig& config, std::size_t n, std::size_t d, std::size_t l) {
  config.validate();
  NetworkShape shape{n, d, l, config.bias, config.second_layer, config.activation};
  shape.validate();

  TrainState state{NetworkParams(shape), 0, {}, {}};
  const double first_scale = config.init.scale.value_or(1.0 / std::sqrt(static_cast<double>(d)));
  const auto first_rows = static_cast<Eigen::Index>(shape.second_layer_offset());
  const std::uint64_t init_seed = derive_seed(config.seed, "init");
  const std::uint64_t noise_seed = derive_seed(config.seed, "noise");

  auto& theta = state.params.theta();
  state.streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream stream(init_seed, i);
    auto col = theta.col(static_cast<Eigen::Index>(i));
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      const double scale = r < first_rows ? first_scale : config.init.second_layer_scale;
      col(r) = draw_init(config.init.distribution, scale, stream);
    }
    state.streams.emplace_back(noise_seed, i);
  }
  return state;
}

double step(TrainState& state, const Eigen::MatrixXd& features, std::span<const int> labels, const TrainConfig& config) {
  const auto& shape = state.params.shape();
  const auto grad = grad_risk(state.params, features, labels);
  const double drift_scale = config.eta * static_cast<double>(shape.n);

  Eigen::MatrixXd next = state.params.theta() - drift_scale * grad.gradient.theta();

  if (config.noise.sigma > 0.0) {
    const double noise_scale = config.noise.sigma * std::pow(config.eta, 1.0 / config.noise.alpha);
    const std::size_t dim = noise_dim(shape, config.noise_on_second_layer);
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < shape.n; ++i) {
      sample_vector(config.noise, std::span<double>(x.data(), dim), state.streams[i]);
      next.col(static_cast<Eigen::Index>(i)).head(static_cast<Eigen::Index>(dim)) += noise_scale * x;
    }
  }

  if (!next.allFinite()) {
    throw DivergedError(state.k, std::make_shared<const NetworkParams>(state.params));
  }
  state.params.theta() = std::move(next);
  ++state.k;
  return grad.risk;
}

TrainResult train(const TrainConfig& config, std::size_t n, const Dataset& train_set, const Dataset& test_set,
                  const EpochObserver& observer) {
  config.validate();
  if (train_set.size() == 0 || test_set.size() == 0) throw DomainError("training and test sets must be non-empty");
  if (config.batch_size > train_set.size()) throw DomainError("batch size larger than the training set");
  if (train_set.dim() != test_set.dim()) throw DomainError("train/test feature dimensions differ");

  const std::size_t l = std::max(train_set.num_classes, test_set.num_classes);
  TrainState state = init_state(config, n, train_set.dim(), l);

  TrainResult result;
  if (config.noise.sigma > 0.0) {
    const double bound = std::pow(static_cast<double>(n), -config.noise.alpha / 2.0 - 1.0);
    if (config.eta > bound) {
      result.warnings.push_back("step size " + std::to_string(config.eta) + " exceeds n^(-alpha/2-1) = " +
                                std::to_string(bound) + "; the compressibility guarantee assumes the smaller step");
    }
  }
  if (config.second_layer == SecondLayer::Fixed && l > 1) {
    result.warnings.push_back("fixed second layer gives every class the same logit; cross-entropy gradients vanish");
  }
  if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty()) {
    std::filesystem::create_directories(config.checkpoint_dir);
  }

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double weighted_risk = 0.0;
    for (const auto& idx : batches(train_set.size(), config.batch_size, epoch_shuffle_seed(config.seed, epoch))) {
      const Dataset batch = train_set.subset(idx);
      try {
        weighted_risk += step(state, batch.features, batch.labels, config) * static_cast<double>(idx.size());
      } catch (const DivergedError& e) {
        if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() && e.last_finite()) {
          save_checkpoint(config.checkpoint_dir / "last_finite.ckpt", *e.last_finite());
        }
        throw;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = weighted_risk / static_cast<double>(train_set.size());
    rec.train_acc = accuracy(state.params, train_set.features, train_set.labels);
    const bool stop = config.target_train_acc && rec.train_acc >= *config.target_train_acc;
    if (epoch % config.eval_every == 0 || epoch == config.epochs || stop) {
      rec.test_acc = accuracy(state.params, test_set.features, test_set.labels);
    } else {
      rec.test_acc = std::numeric_limits<double>::quiet_NaN();
    }
    state.history.push_back(rec);
    if (observer) observer(rec, state.params);
    if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() && epoch % config.checkpoint_every == 0) {
      save_checkpoint(config.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".ckpt"), state.params);
    }
    if (stop) {
      result.early_stopped = true;
      break;
    }
  }

  result.params = std::move(state.params);
  result.history = std::move(state.history);
  result.steps = state.k;
  return result;
}

}  // namespace htsgd
