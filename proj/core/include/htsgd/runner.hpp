#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "htsgd/config.hpp"
#include "htsgd/csv.hpp"
#include "htsgd/sde_experiments.hpp"

namespace htsgd {

/// Process exit codes shared by the CLI subcommands.
enum ExitStatus : int { kExitOk = 0, kExitRunFailure = 1, kExitConfigError = 2 };

/// Git blob hash ("blob <size>\0" + content, SHA-1, lowercase hex).
std::string git_blob_hash(const std::string& content);

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  ///< set when the seed diverged or failed
  std::size_t epochs_run = 0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double pruning_ratio = 0.0;
  double train_acc_ap = 0.0;
  double test_acc_ap = 0.0;
  double top10_share = 0.0;  ///< fraction of ||Theta||_F^2 in the top 10% of columns
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  ///< sample (n-1) standard deviation
};

/// One line of the results table: every metric as mean +- sd over completed seeds.
struct ResultRow {
  std::string label;  ///< alpha, or "no noise" when sigma == 0
  std::size_t repeats = 0;
  std::size_t completed = 0;
  MeanSd train_acc, test_acc, pruning_ratio, train_acc_ap, test_acc_ap, top10_share;
};

ResultRow aggregate(const std::string& label, std::span<const SeedResult> seeds);
std::string row_label(const ExperimentConfig& config);

struct RunOutcome {
  std::vector<SeedResult> seeds;
  ResultRow row;
};

/// Runs `repeat` seeds (train.seed, train.seed + 1, ...) of
/// train -> pruning_ratio -> evaluate_pruned and writes into output_dir:
///   manifest.cfg   canonical config plus its git blob hash
///   seeds.csv      one line per seed
///   metrics.csv    per-epoch metrics of every seed
///   results.csv    the aggregated ResultRow
///   checkpoints/   final parameters per seed
/// A diverging seed is recorded and does not abort the others.
RunOutcome run_experiment(const ExperimentConfig& config, const FlatConfig& source, std::ostream* log = nullptr);

/// `run <config>`: returns an ExitStatus.
int run_command(const std::filesystem::path& config_path, std::ostream& log, std::ostream& err,
                const std::filesystem::path& output_override = {});

/// `sde-run <config>`: experiment.kind in {euler, poc, iid, maxstable, tail}.
/// Writes table.csv, plot.tsv and manifest.cfg (tail: tail.csv and
/// second_moment.tsv) into run.output_dir.
int sde_run_command(const std::filesystem::path& config_path, std::ostream& log, std::ostream& err,
                    const std::filesystem::path& output_override = {});

/// Builds a drift from `experiment.drift` (zero | constant | linear | logistic)
/// and `drift.*` parameters.
sde::Drift drift_from_config(const FlatConfig& config, std::size_t p);

/// `report <dir>`: renders every results.csv / table.csv under dir (and its
/// immediate subdirectories), writes log-log plot TSVs to dir/plots/, and
/// marks directories holding a manifest but no results as incomplete.
/// Returns 0 when at least one complete row was rendered, 1 otherwise.
int report_command(const std::filesystem::path& dir, std::ostream& out);

CsvTable result_row_table(const ResultRow& row, const ExperimentConfig& config);
CsvTable seed_table(std::span<const SeedResult> seeds);

}  // namespace htsgd
