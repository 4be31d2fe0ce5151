#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "htsgd/dataset.hpp"
#include "htsgd/trainer.hpp"

namespace htsgd {

/// Flat `section.key = value` configuration. '#' starts a comment; blank lines
/// are ignored; keys have exactly one dot. Every typed getter records the key
/// as consumed so that `reject_unused()` can flag typos.
class FlatConfig {
 public:
  static FlatConfig parse(std::istream& in, const std::string& source = "<config>");
  static FlatConfig parse_string(const std::string& text);
  static FlatConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);

  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  /// Numbers accept plain decimals and powers written as `2^-4`.
  double get_double(const std::string& key, double fallback) const;
  double require_double(const std::string& key) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::uint64_t require_u64(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list of numbers.
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::size_t> get_size_list(const std::string& key) const;

  /// Throws ConfigError naming the first key no getter asked for.
  void reject_unused() const;

  /// Sorted `key = value` lines; a loadable config in its own right.
  std::string canonical() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

/// Parses "2^-4" style powers or ordinary decimal numbers.
double parse_number(const std::string& text);

/// Root directory for relative dataset paths: $HTSGD_DATA_ROOT, else ./data.
std::filesystem::path data_root();

struct DatasetSpec {
  std::string name = "synthetic";  ///< ecg5000 | mnist | cifar10 | synthetic
  std::filesystem::path path;      ///< relative paths resolve against data_root()
  std::uint64_t split_seed = 0;
  std::size_t train_count = 0;     ///< 0 = dataset default (ECG5000: 500)
  // synthetic mixture
  std::size_t d = 10;
  std::size_t l = 2;
  std::size_t per_class = 100;
  double separation = 10.0;
};

struct ExperimentConfig {
  std::string label;
  DatasetSpec dataset;
  std::size_t n = 100;
  TrainConfig train;
  std::size_t repeat = 1;
  std::size_t jobs = 1;
  double prune_epsilon = 0.1;
  std::filesystem::path output_dir = "results";
};

/// Validates every field; errors are ConfigError carrying the key path.
ExperimentConfig parse_experiment_config(const FlatConfig& config);

/// Loads and splits the configured dataset.
DatasetSplit load_dataset(const DatasetSpec& spec);

}  // namespace htsgd
