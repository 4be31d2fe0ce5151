#include "htsgd/sde_experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "htsgd/csv.hpp"
#include "htsgd/errors.hpp"
#include "htsgd/prune.hpp"
#include "htsgd/random_stream.hpp"
#include "htsgd/stats.hpp"

namespace htsgd::sde {

namespace {

std::uint64_t trial_seed(std::uint64_t seed, std::string_view purpose, std::size_t trial) {
  return splitmix64(derive_seed(seed, purpose) + trial);
}

double max_column_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).colwise().norm().maxCoeff();
}

void fill_slope(RateTable& table) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& r : table.rows) {
    xs.push_back(r.x);
    ys.push_back(r.value);
  }
  const bool positive = std::all_of(ys.begin(), ys.end(), [](double v) { return v > 0.0; });
  table.slope = (positive && xs.size() >= 2) ? stats::loglog_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
}

RateRow summarize(double x, const std::vector<double>& samples) {
  return {x, stats::median(samples), stats::iqr(samples)};
}

}  // namespace

void RateTable::write_csv(const std::filesystem::path& path) const {
  CsvTable t;
  t.header = {x_name, statistic, "iqr", "slope"};
  for (const auto& r : rows) {
    t.rows.push_back({format_double(r.x), format_double(r.value), format_double(r.iqr), format_double(slope)});
  }
  htsgd::write_csv(path, t);
}

void RateTable::write_plot_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "log_" << x_name << '\t' << "log_" << statistic << '\n';
  for (const auto& r : rows) {
    if (r.x > 0.0 && r.value > 0.0) out << format_double(std::log(r.x)) << '\t' << format_double(std::log(r.value)) << '\n';
  }
}

bool RateTable::strictly_decreasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].value < rows[i - 1].value)) return false;
  }
  return !rows.empty();
}

RateTable euler_error_experiment(const EulerErrorConfig& config) {
  if (config.trials == 0) throw DomainError("trials must be >= 1");
  if (config.etas.empty()) throw DomainError("need at least one step size");
  std::vector<double> etas = config.etas;
  std::sort(etas.begin(), etas.end(), std::greater<>());
  const auto fine_steps = static_cast<std::size_t>(std::llround(config.T / config.eta_ref));

  std::vector<std::vector<double>> errors(etas.size());
  for (std::size_t trial = 0; trial < config.trials; ++trial) {
    const auto seed = trial_seed(config.seed, "euler-trial", trial);
    const auto path = NoisePath::generate(config.noise, config.n, config.p, config.eta_ref, fine_steps, seed);
    const ParticleSystem system{initial_states(config.n, config.p, config.init_scale, seed), 0.0, config.drift,
                                config.noise};
    const Eigen::MatrixXd reference = euler_simulate(system, config.eta_ref, config.T, path, {});
    for (std::size_t e = 0; e < etas.size(); ++e) {
      const Eigen::MatrixXd coarse = euler_simulate(system, etas[e], config.T, path, {});
      errors[e].push_back(max_column_distance(coarse, reference));
    }
  }

  RateTable table;
  table.x_name = "eta";
  for (std::size_t e = 0; e < etas.size(); ++e) table.rows.push_back(summarize(etas[e], errors[e]));
  fill_slope(table);
  table.note = "reference: Euler on eta_ref=" + format_double(config.eta_ref) + " with the shared noise path";
  return table;
}

RateTable poc_experiment(const PocConfig& config) {
  if (config.trials == 0) throw DomainError("trials must be >= 1");
  if (config.ns.empty()) throw DomainError("need at least one particle count");
  std::vector<std::size_t> ns = config.ns;
  std::sort(ns.begin(), ns.end());
  if (ns.back() > config.n_ref) throw DomainError("particle counts must not exceed N_ref");
  const auto steps = static_cast<std::size_t>(std::llround(config.T / config.eta));

  std::vector<std::vector<double>> errors(ns.size());
  for (std::size_t trial = 0; trial < config.trials; ++trial) {
    const auto seed = trial_seed(config.seed, "poc-trial", trial);
    const auto path = NoisePath::generate(config.noise, config.n_ref, config.p, config.eta, steps, seed);
    const Eigen::MatrixXd theta0 = initial_states(config.n_ref, config.p, config.init_scale, seed);
    const Trajectory reference =
        euler_simulate(ParticleSystem{theta0, 0.0, config.drift, config.noise}, config.eta, config.T, path);

    for (std::size_t j = 0; j < ns.size(); ++j) {
      const auto n = static_cast<Eigen::Index>(ns[j]);
      const auto sub_path = path.restrict(ns[j]);
      double sup = 0.0;
      euler_simulate(ParticleSystem{theta0.leftCols(n), 0.0, config.drift, config.noise}, config.eta, config.T,
                     sub_path, [&](std::size_t k, double, const Eigen::MatrixXd& state) {
                       sup = std::max(sup, max_column_distance(state, reference.states[k].leftCols(n)));
                     });
      errors[j].push_back(sup);
    }
  }

  RateTable table;
  table.x_name = "n";
  for (std::size_t j = 0; j < ns.size(); ++j) table.rows.push_back(summarize(static_cast<double>(ns[j]), errors[j]));
  fill_slope(table);
  table.note = "mean-field proxy: N_ref=" + std::to_string(config.n_ref) +
               " particles; adds an O(N_ref^-1/2) floor to the measured errors";
  return table;
}

RateTable iid_compressibility_experiment(double alpha, std::span<const std::size_t> ns, double kappa,
                                         std::size_t trials, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("i.i.d. compressibility needs alpha in (0, 2)");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw DomainError("kappa must lie in (0, 1]");
  if (trials == 0) throw DomainError("trials must be >= 1");
  RateTable table;
  table.x_name = "n";
  for (std::size_t n : ns) {
    if (n == 0) throw DomainError("sequence length must be >= 1");
    const std::uint64_t n_seed = derive_seed(seed, "iid-compressibility-" + std::to_string(n));
    std::vector<double> errors;
    std::vector<double> x(n);
    for (std::size_t trial = 0; trial < trials; ++trial) {
      RandomStream stream(n_seed, trial);
      for (double& v : x) v = sample_scalar(alpha, stream);
      double norm_sq = 0.0;
      for (double v : x) norm_sq += v * v;
      errors.push_back(kterm_error(x, kept_count(kappa, n)) / std::sqrt(norm_sq));
    }
    table.rows.push_back(summarize(static_cast<double>(n), errors));
  }
  fill_slope(table);
  return table;
}

RateTable max_stable_scaling(double alpha, std::span<const std::size_t> ns, std::size_t trials, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("max-stable scaling needs alpha in (0, 2)");
  if (trials == 0) throw DomainError("trials must be >= 1");
  RateTable table;
  table.x_name = "n";
  table.statistic = "mean_max";
  for (std::size_t n : ns) {
    if (n == 0) throw DomainError("sample count must be >= 1");
    const std::uint64_t n_seed = derive_seed(seed, "max-stable-" + std::to_string(n));
    std::vector<double> maxima;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      RandomStream stream(n_seed, trial);
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(sample_scalar(alpha, stream)));
      maxima.push_back(m);
    }
    table.rows.push_back({static_cast<double>(n), stats::mean(maxima), stats::iqr(maxima)});
  }
  fill_slope(table);
  return table;
}

double hill_tail_index(std::span<const double> samples, std::size_t k) {
  if (k == 0) throw DomainError("Hill estimator needs k >= 1");
  std::vector<double> positive;
  positive.reserve(samples.size());
  for (double v : samples) {
    if (v > 0.0 && std::isfinite(v)) positive.push_back(v);
  }
  if (positive.size() < k + 1) {
    throw DomainError("Hill estimator needs at least k+1 = " + std::to_string(k + 1) + " positive samples");
  }
  std::nth_element(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(k), positive.end(),
                   std::greater<>());
  const double threshold = positive[k];
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) sum += std::log(positive[j] / threshold);
  if (!(sum > 0.0)) throw DomainError("Hill estimator undefined: top order statistics are all equal");
  return static_cast<double>(k) / sum;
}

TailProbeReport second_moment_divergence_probe(const TailProbeConfig& config) {
  if (config.replicas < 2) throw DomainError("tail probe needs at least two replicas");
  if (!(config.t >= 0.0)) throw DomainError("probe time must be >= 0");
  if (!(config.hill_fraction > 0.0 && config.hill_fraction < 1.0)) throw DomainError("hill_fraction must lie in (0, 1)");

  Eigen::MatrixXd theta = initial_states(config.replicas, config.p, config.init_scale, config.seed);
  if (config.t > 0.0) {
    const double eta = config.eta > 0.0 ? config.eta : config.t;
    const ParticleSystem system{theta, 0.0, config.drift, config.noise};
    theta = euler_simulate_streaming(system, eta, config.t, config.seed);
  }

  const Eigen::VectorXd norms = theta.colwise().norm().transpose();
  std::vector<double> values(norms.data(), norms.data() + norms.size());

  TailProbeReport report;
  report.hill_k = std::max<std::size_t>(10, static_cast<std::size_t>(config.hill_fraction * static_cast<double>(config.replicas)));
  report.hill_k = std::min(report.hill_k, values.size() - 1);
  report.hill_index = hill_tail_index(values, report.hill_k);

  double sum_sq = 0.0;
  double max_sq = 0.0;
  std::size_t next_mark = 1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double sq = values[i] * values[i];
    sum_sq += sq;
    max_sq = std::max(max_sq, sq);
    if (i + 1 == next_mark || i + 1 == values.size()) {
      report.running_second_moment.emplace_back(i + 1, sum_sq / static_cast<double>(i + 1));
      next_mark *= 2;
    }
  }
  report.dominance_ratio = max_sq / sum_sq;
  report.dominance_threshold = 1.0 / std::sqrt(static_cast<double>(config.replicas));
  return report;
}

}  // namespace htsgd::sde
