#include "htsgd/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "htsgd/csv.hpp"
#include "htsgd/errors.hpp"

namespace htsgd {

namespace {

template <typename Fn>
auto as_config_error(const std::string& key, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

double parse_number(const std::string& text) {
  const std::string_view t = trim(text);
  const auto caret = t.find('^');
  if (caret != std::string_view::npos) {
    const double base = parse_double(t.substr(0, caret));
    const double exponent = parse_double(t.substr(caret + 1));
    return std::pow(base, exponent);
  }
  return parse_double(t);
}

FlatConfig FlatConfig::parse(std::istream& in, const std::string& source) {
  FlatConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(source + ": expected 'section.key = value'", line_no);
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size() || key.find('.', dot + 1) != std::string::npos) {
      throw ParseError(source + ": key '" + key + "' must have the form section.key", line_no);
    }
    if (cfg.entries_.count(key)) throw ParseError(source + ": duplicate key '" + key + "'", line_no);
    cfg.entries_[key] = value;
  }
  return cfg;
}

FlatConfig FlatConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config " + path.string());
  return parse(in, path.string());
}

void FlatConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

std::optional<std::string> FlatConfig::get(const std::string& key) const {
  used_.insert(key);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::string FlatConfig::require_string(const std::string& key) const {
  auto v = get(key);
  if (!v || v->empty()) throw ConfigError(key, "required key is missing");
  return *v;
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  return as_config_error(key, [&] { return parse_number(*v); });
}

double FlatConfig::require_double(const std::string& key) const {
  const auto v = require_string(key);
  return as_config_error(key, [&] { return parse_number(v); });
}

std::optional<double> FlatConfig::get_optional_double(const std::string& key) const {
  const auto v = get(key);
  if (!v || v->empty()) return std::nullopt;
  return as_config_error(key, [&] { return parse_number(*v); });
}

std::uint64_t FlatConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  return as_config_error(key, [&] {
    std::size_t pos = 0;
    if (!v->empty() && v->front() == '-') throw std::invalid_argument("expected a non-negative integer");
    const auto out = std::stoull(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("expected a non-negative integer, got '" + *v + "'");
    return static_cast<std::uint64_t>(out);
  });
}

std::uint64_t FlatConfig::require_u64(const std::string& key) const {
  require_string(key);
  return get_u64(key, 0);
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + *v + "'");
}

std::vector<double> FlatConfig::get_double_list(const std::string& key) const {
  const auto v = get(key);
  std::vector<double> out;
  if (!v) return out;
  for (const auto& item : split(*v, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(as_config_error(key, [&] { return parse_number(item); }));
  }
  return out;
}

std::vector<std::size_t> FlatConfig::get_size_list(const std::string& key) const {
  std::vector<std::size_t> out;
  for (double x : get_double_list(key)) {
    if (!(x >= 1.0) || std::round(x) != x) throw ConfigError(key, "expected positive integers");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

void FlatConfig::reject_unused() const {
  for (const auto& [key, value] : entries_) {
    if (!used_.count(key)) throw ConfigError(key, "unknown configuration key");
  }
}

std::string FlatConfig::canonical() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
  return out;
}

std::filesystem::path data_root() {
  if (const char* env = std::getenv("HTSGD_DATA_ROOT"); env && *env) return env;
  return "data";
}

ExperimentConfig parse_experiment_config(const FlatConfig& config) {
  ExperimentConfig out;

  out.dataset.name = config.get_string("dataset.name", "synthetic");
  if (out.dataset.name != "ecg5000" && out.dataset.name != "mnist" && out.dataset.name != "cifar10" &&
      out.dataset.name != "synthetic") {
    throw ConfigError("dataset.name", "expected ecg5000, mnist, cifar10 or synthetic");
  }
  out.dataset.path = config.get_string("dataset.path", out.dataset.name);
  out.dataset.split_seed = config.get_u64("dataset.split_seed", 0);
  out.dataset.train_count = config.get_u64("dataset.train_count", 0);
  out.dataset.d = config.get_u64("dataset.d", out.dataset.d);
  out.dataset.l = config.get_u64("dataset.l", out.dataset.l);
  out.dataset.per_class = config.get_u64("dataset.per_class", out.dataset.per_class);
  out.dataset.separation = config.get_double("dataset.separation", out.dataset.separation);
  if (out.dataset.name == "synthetic") {
    if (out.dataset.per_class == 0) throw ConfigError("dataset.per_class", "must be >= 1");
    if (out.dataset.d < out.dataset.l) throw ConfigError("dataset.d", "must be >= dataset.l");
  }

  out.n = config.get_u64("model.n", out.n);
  if (out.n == 0) throw ConfigError("model.n", "must be >= 1");

  auto& t = out.train;
  as_config_error("model.activation", [&] { t.activation = parse_activation(config.get_string("model.activation", "relu")); });
  as_config_error("model.second_layer",
                  [&] { t.second_layer = parse_second_layer(config.get_string("model.second_layer", "trainable")); });
  t.bias = config.get_bool("model.bias", true);

  t.eta = config.require_double("train.eta");
  if (!(t.eta > 0.0)) throw ConfigError("train.eta", "must be > 0");
  t.batch_size = config.require_u64("train.batch_size");
  if (t.batch_size == 0) throw ConfigError("train.batch_size", "must be >= 1");
  t.epochs = config.get_u64("train.epochs", 1);
  t.seed = config.get_u64("train.seed", 0);
  const auto init = config.get_string("train.init", "gaussian");
  if (init == "gaussian") {
    t.init.distribution = InitDistribution::Gaussian;
  } else if (init == "uniform") {
    t.init.distribution = InitDistribution::Uniform;
  } else {
    throw ConfigError("train.init", "expected gaussian or uniform");
  }
  t.init.scale = config.get_optional_double("train.init_scale");
  if (t.init.scale && !(*t.init.scale > 0.0)) throw ConfigError("train.init_scale", "must be > 0");
  t.init.second_layer_scale = config.get_double("train.second_layer_init_scale", 1.0);
  if (!(t.init.second_layer_scale > 0.0)) throw ConfigError("train.second_layer_init_scale", "must be > 0");
  t.target_train_acc = config.get_optional_double("train.target_train_acc");
  if (t.target_train_acc && !(*t.target_train_acc > 0.0 && *t.target_train_acc <= 1.0)) {
    throw ConfigError("train.target_train_acc", "must lie in (0, 1]");
  }
  t.eval_every = config.get_u64("train.eval_every", 1);
  if (t.eval_every == 0) throw ConfigError("train.eval_every", "must be >= 1");
  t.checkpoint_every = config.get_u64("train.checkpoint_every", 0);

  t.noise.alpha = config.get_double("noise.alpha", 2.0);
  if (!(t.noise.alpha > 0.0 && t.noise.alpha <= 2.0)) {
    throw ConfigError("noise.alpha", "stability index must lie in (0, 2]");
  }
  as_config_error("noise.type", [&] { t.noise.vtype = parse_vector_type(config.get_string("noise.type", "I")); });
  t.noise.sigma = config.get_double("noise.sigma", 0.0);
  if (!(t.noise.sigma >= 0.0)) throw ConfigError("noise.sigma", "must be >= 0");
  t.noise_on_second_layer = config.get_bool("noise.second_layer", true);

  out.prune_epsilon = config.get_double("prune.epsilon", 0.1);
  if (!(out.prune_epsilon > 0.0 && out.prune_epsilon < 1.0)) throw ConfigError("prune.epsilon", "must lie in (0, 1)");

  out.repeat = config.get_u64("run.repeat", 1);
  if (out.repeat == 0) throw ConfigError("run.repeat", "must be >= 1");
  out.jobs = std::max<std::size_t>(1, config.get_u64("run.jobs", 1));
  out.output_dir = config.get_string("run.output_dir", "results");
  out.label = config.get_string("run.label", "");
  config.reject_unused();
  return out;
}

DatasetSplit load_dataset(const DatasetSpec& spec) {
  const auto resolve = [](const std::filesystem::path& p) { return p.is_absolute() ? p : data_root() / p; };
  DatasetSplit split;
  if (spec.name == "ecg5000") {
    split = load_ecg5000(resolve(spec.path), spec.split_seed, spec.train_count ? spec.train_count : 500);
  } else if (spec.name == "mnist") {
    const auto dir = resolve(spec.path);
    split.train = load_mnist_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
    split.test = load_mnist_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
  } else if (spec.name == "cifar10") {
    const auto dir = resolve(spec.path);
    std::vector<std::filesystem::path> train_files;
    for (int b = 1; b <= 5; ++b) train_files.push_back(dir / ("data_batch_" + std::to_string(b) + ".bin"));
    const std::vector<std::filesystem::path> test_files{dir / "test_batch.bin"};
    split.train = load_cifar10_bin(train_files);
    split.test = load_cifar10_bin(test_files);
  } else if (spec.name == "synthetic") {
    const auto all = synthetic_mixture(spec.d, spec.l, spec.per_class, spec.split_seed, spec.separation);
    const std::size_t train = spec.train_count ? spec.train_count : (all.size() * 4) / 5;
    if (train == 0 || train >= all.size()) throw ConfigError("dataset.train_count", "must leave both splits non-empty");
    split = random_split(all, train, derive_seed(spec.split_seed, "synthetic-split"));
  } else {
    throw ConfigError("dataset.name", "unknown dataset '" + spec.name + "'");
  }
  if (spec.name != "ecg5000" && spec.name != "synthetic" && spec.train_count > 0 &&
      spec.train_count < split.train.size()) {
    const auto perm = seeded_permutation(split.train.size(), derive_seed(spec.split_seed, "subsample"));
    split.train = split.train.subset(std::span<const std::size_t>(perm).first(spec.train_count));
  }
  split.train.validate();
  split.test.validate();
  return split;
}

}  // namespace htsgd
