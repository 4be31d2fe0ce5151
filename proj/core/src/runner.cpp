#include "htsgd/runner.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "htsgd/checkpoint.hpp"
#include "htsgd/errors.hpp"
#include "htsgd/prune.hpp"
#include "htsgd/stats.hpp"

namespace htsgd {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MeanSd mean_sd(const std::vector<double>& xs) {
  if (xs.empty()) return {kNaN, kNaN};
  return {stats::mean(xs), stats::sample_sd(xs)};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string manifest_text(const FlatConfig& source, const std::string& extra) {
  const std::string canonical = source.canonical();
  std::string text = "# htsgd manifest\n# config-hash " + git_blob_hash(canonical) + "\n" + extra + canonical;
  return text;
}

struct SeedRun {
  SeedResult result;
  std::vector<std::vector<std::string>> metrics;
};

SeedRun run_seed(const ExperimentConfig& config, const DatasetSplit& data, std::uint64_t seed, const fs::path& out_dir) {
  SeedRun run;
  run.result.seed = seed;
  TrainConfig tc = config.train;
  tc.seed = seed;
  if (tc.checkpoint_every > 0) tc.checkpoint_dir = out_dir / "checkpoints" / ("seed_" + std::to_string(seed));
  try {
    const auto trained = train(tc, config.n, data.train, data.test, [&](const EpochRecord& rec, const NetworkParams&) {
      run.metrics.push_back({std::to_string(seed), std::to_string(rec.epoch), format_double(rec.train_loss),
                             format_double(rec.train_acc), format_double(rec.test_acc)});
    });
    save_checkpoint(out_dir / "checkpoints" / ("seed_" + std::to_string(seed) + ".ckpt"), trained.params);
    auto& r = run.result;
    r.epochs_run = trained.history.size();
    r.train_acc = trained.history.empty() ? accuracy(trained.params, data.train.features, data.train.labels)
                                          : trained.history.back().train_acc;
    r.test_acc = accuracy(trained.params, data.test.features, data.test.labels);
    r.pruning_ratio = pruning_ratio(trained.params, config.prune_epsilon);
    const auto ap = evaluate_pruned(trained.params, data.train, data.test, RemovePercent{r.pruning_ratio});
    r.train_acc_ap = ap.train_acc;
    r.test_acc_ap = ap.test_acc;
    r.top10_share = top_norm_share(trained.params, 0.1);
    r.ok = true;
  } catch (const DivergedError& e) {
    run.result.error = e.what();
  } catch (const DegenerateInputError& e) {
    run.result.error = e.what();
  }
  return run;
}

std::string cell(const MeanSd& v, int precision, bool with_sd) {
  if (std::isnan(v.mean)) return "-";
  if (!with_sd) return fmt::format("{:.{}f}", v.mean, precision);
  return fmt::format("{:.{}f}±{:.{}f}", v.mean, precision, v.sd, precision);
}

MeanSd read_mean_sd(const CsvTable& t, std::size_t row, const std::string& name) {
  return {parse_double(t.rows[row][t.column(name + "_mean")]), parse_double(t.rows[row][t.column(name + "_sd")])};
}

// Six significant digits for display; non-numeric cells pass through.
std::string short_number(const std::string& text) {
  try {
    return fmt::format("{:.6g}", parse_double(text));
  } catch (const std::exception&) {
    return text;
  }
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  // Width in code points; the ± sign is two bytes in UTF-8.
  auto display_width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) {
      if ((c & 0xC0) != 0x80) ++w;
    }
    return w;
  };
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], display_width(row[i]));
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      out += (i ? " | " : "");
      out += rows[r][i] + std::string(widths[i] - display_width(rows[r][i]), ' ');
    }
    out += '\n';
    if (r == 0) {
      for (std::size_t i = 0; i < widths.size(); ++i) out += (i ? "-+-" : "") + std::string(widths[i], '-');
      out += '\n';
    }
  }
  return out;
}

}  // namespace

std::string git_blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string row_label(const ExperimentConfig& config) {
  if (!config.label.empty()) return config.label;
  if (config.train.noise.sigma == 0.0) return "no noise";
  return format_double(config.train.noise.alpha);
}

ResultRow aggregate(const std::string& label, std::span<const SeedResult> seeds) {
  ResultRow row;
  row.label = label;
  row.repeats = seeds.size();
  std::vector<double> tr, te, pr, tra, tea, top;
  for (const auto& s : seeds) {
    if (!s.ok) continue;
    ++row.completed;
    tr.push_back(s.train_acc);
    te.push_back(s.test_acc);
    pr.push_back(s.pruning_ratio);
    tra.push_back(s.train_acc_ap);
    tea.push_back(s.test_acc_ap);
    top.push_back(s.top10_share);
  }
  row.train_acc = mean_sd(tr);
  row.test_acc = mean_sd(te);
  row.pruning_ratio = mean_sd(pr);
  row.train_acc_ap = mean_sd(tra);
  row.test_acc_ap = mean_sd(tea);
  row.top10_share = mean_sd(top);
  return row;
}

CsvTable result_row_table(const ResultRow& row, const ExperimentConfig& config) {
  CsvTable t;
  t.header = {"label", "dataset", "alpha", "noise_type", "sigma", "n", "repeats", "completed"};
  std::vector<std::string> values{row.label,
                                  config.dataset.name,
                                  format_double(config.train.noise.alpha),
                                  std::string(to_string(config.train.noise.vtype)),
                                  format_double(config.train.noise.sigma),
                                  std::to_string(config.n),
                                  std::to_string(row.repeats),
                                  std::to_string(row.completed)};
  const std::pair<const char*, const MeanSd*> metrics[] = {
      {"train_acc", &row.train_acc},       {"test_acc", &row.test_acc},       {"pruning_ratio", &row.pruning_ratio},
      {"train_acc_ap", &row.train_acc_ap}, {"test_acc_ap", &row.test_acc_ap}, {"top10_share", &row.top10_share}};
  for (const auto& [name, v] : metrics) {
    t.header.push_back(std::string(name) + "_mean");
    t.header.push_back(std::string(name) + "_sd");
    values.push_back(format_double(v->mean));
    values.push_back(format_double(v->sd));
  }
  t.rows.push_back(std::move(values));
  return t;
}

CsvTable seed_table(std::span<const SeedResult> seeds) {
  CsvTable t;
  t.header = {"seed",         "status",      "epochs",      "train_acc", "test_acc", "pruning_ratio",
              "train_acc_ap", "test_acc_ap", "top10_share", "error"};
  for (const auto& s : seeds) {
    std::string error = s.error;
    for (char& c : error) {
      if (c == ',' || c == '\n') c = ';';
    }
    t.rows.push_back({std::to_string(s.seed), s.ok ? "ok" : "failed", std::to_string(s.epochs_run),
                      format_double(s.train_acc), format_double(s.test_acc), format_double(s.pruning_ratio),
                      format_double(s.train_acc_ap), format_double(s.test_acc_ap), format_double(s.top10_share),
                      error});
  }
  return t;
}

RunOutcome run_experiment(const ExperimentConfig& config, const FlatConfig& source, std::ostream* log) {
  const fs::path out_dir = config.output_dir;
  fs::create_directories(out_dir / "checkpoints");

  std::vector<std::uint64_t> seeds(config.repeat);
  for (std::size_t r = 0; r < config.repeat; ++r) seeds[r] = config.train.seed + r;
  {
    std::string seed_line = "# seeds:";
    for (auto s : seeds) seed_line += " " + std::to_string(s);
    write_text(out_dir / "manifest.cfg", manifest_text(source, seed_line + "\n"));
  }

  const DatasetSplit data = load_dataset(config.dataset);
  if (log) {
    *log << fmt::format("dataset {}: {} train / {} test, d={}, classes={}\n", config.dataset.name, data.train.size(),
                        data.test.size(), data.train.dim(), data.train.num_classes);
  }

  std::vector<SeedRun> runs(seeds.size());
  std::mutex log_mutex;
  auto worker = [&](std::size_t r) {
    runs[r] = run_seed(config, data, seeds[r], out_dir);
    if (log) {
      const auto& s = runs[r].result;
      std::lock_guard lock(log_mutex);
      if (s.ok) {
        *log << fmt::format("seed {}: train {:.4f} test {:.4f} pruning ratio {:.2f}% a.p. train {:.4f} test {:.4f}\n",
                            s.seed, s.train_acc, s.test_acc, s.pruning_ratio, s.train_acc_ap, s.test_acc_ap);
      } else {
        *log << fmt::format("seed {}: FAILED ({})\n", s.seed, s.error);
      }
    }
  };
  if (config.jobs <= 1) {
    for (std::size_t r = 0; r < seeds.size(); ++r) worker(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < std::min(config.jobs, seeds.size()); ++j) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < seeds.size(); r = next++) worker(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  RunOutcome outcome;
  CsvTable metrics;
  metrics.header = {"seed", "epoch", "train_loss", "train_acc", "test_acc"};
  for (auto& run : runs) {
    outcome.seeds.push_back(run.result);
    for (auto& m : run.metrics) metrics.rows.push_back(std::move(m));
  }
  outcome.row = aggregate(row_label(config), outcome.seeds);
  write_csv(out_dir / "metrics.csv", metrics);
  write_csv(out_dir / "seeds.csv", seed_table(outcome.seeds));
  write_csv(out_dir / "results.csv", result_row_table(outcome.row, config));
  return outcome;
}

int run_command(const fs::path& config_path, std::ostream& log, std::ostream& err, const fs::path& output_override) {
  ExperimentConfig config;
  FlatConfig source;
  try {
    source = FlatConfig::load(config_path);
    if (!output_override.empty()) source.set("run.output_dir", output_override.string());
    config = parse_experiment_config(source);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  try {
    const auto outcome = run_experiment(config, source, &log);
    log << "results written to " << config.output_dir.string() << '\n';
    return outcome.row.completed == outcome.row.repeats ? kExitOk : kExitRunFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return kExitRunFailure;
  }
}

sde::Drift drift_from_config(const FlatConfig& config, std::size_t p) {
  const auto kind = config.get_string("experiment.drift", "linear");
  if (kind == "zero") return sde::zero_drift();
  if (kind == "linear") return sde::linear_drift(config.get_double("drift.rate", 1.0));
  if (kind == "logistic") {
    return sde::mean_field_logistic_drift(config.get_double("drift.rate", 1.0), config.get_double("drift.coupling", 2.0));
  }
  if (kind == "constant") {
    const double c = config.get_double("drift.constant", 1.0);
    return sde::constant_drift(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p), c));
  }
  throw ConfigError("experiment.drift", "expected zero, linear, logistic or constant");
}

int sde_run_command(const fs::path& config_path, std::ostream& log, std::ostream& err, const fs::path& output_override) {
  FlatConfig cfg;
  std::string kind;
  fs::path out_dir;
  std::optional<sde::RateTable> table;
  std::optional<sde::TailProbeReport> tail;
  try {
    cfg = FlatConfig::load(config_path);
    if (!output_override.empty()) cfg.set("run.output_dir", output_override.string());
    kind = cfg.require_string("experiment.kind");
    out_dir = cfg.get_string("run.output_dir", "results/sde");
    cfg.get("run.label");

    StableSpec noise;
    noise.alpha = cfg.get_double("experiment.alpha", 1.75);
    if (!(noise.alpha > 0.0 && noise.alpha <= 2.0)) {
      throw ConfigError("experiment.alpha", "stability index must lie in (0, 2]");
    }
    try {
      noise.vtype = parse_vector_type(cfg.get_string("experiment.type", "III"));
    } catch (const DomainError& e) {
      throw ConfigError("experiment.type", e.what());
    }
    noise.sigma = cfg.get_double("experiment.sigma", 1.0);
    if (!(noise.sigma >= 0.0)) throw ConfigError("experiment.sigma", "must be >= 0");
    const std::uint64_t seed = cfg.get_u64("experiment.seed", 0);
    const std::size_t p = cfg.get_u64("experiment.p", 1);
    if (p == 0) throw ConfigError("experiment.p", "must be >= 1");
    const double init_scale = cfg.get_double("experiment.init_scale", 1.0);

    auto run_checked = [](auto&& fn) {
      try {
        return fn();
      } catch (const DomainError& e) {
        throw ConfigError("experiment", e.what());
      }
    };

    if (kind == "euler") {
      sde::EulerErrorConfig c;
      c.drift = drift_from_config(cfg, p);
      c.noise = noise;
      c.n = cfg.get_u64("experiment.n", 8);
      c.p = p;
      c.T = cfg.get_double("experiment.T", 1.0);
      c.etas = cfg.get_double_list("experiment.etas");
      c.eta_ref = cfg.get_double("experiment.eta_ref", 0x1p-12);
      c.trials = cfg.get_u64("experiment.trials", 50);
      c.seed = seed;
      c.init_scale = init_scale;
      cfg.reject_unused();
      table = run_checked([&] { return sde::euler_error_experiment(c); });
    } else if (kind == "poc") {
      sde::PocConfig c;
      c.drift = drift_from_config(cfg, p);
      c.noise = noise;
      c.ns = cfg.get_size_list("experiment.ns");
      c.n_ref = cfg.get_u64("experiment.n_ref", 4096);
      c.p = p;
      c.T = cfg.get_double("experiment.T", 1.0);
      c.eta = cfg.get_double("experiment.eta", 0x1p-6);
      c.trials = cfg.get_u64("experiment.trials", 20);
      c.seed = seed;
      c.init_scale = init_scale;
      cfg.reject_unused();
      table = run_checked([&] { return sde::poc_experiment(c); });
    } else if (kind == "iid") {
      const auto ns = cfg.get_size_list("experiment.ns");
      const double kappa = cfg.get_double("experiment.kappa", 0.05);
      const auto trials = cfg.get_u64("experiment.trials", 20);
      cfg.reject_unused();
      table = run_checked([&] { return sde::iid_compressibility_experiment(noise.alpha, ns, kappa, trials, seed); });
    } else if (kind == "maxstable") {
      const auto ns = cfg.get_size_list("experiment.ns");
      const auto trials = cfg.get_u64("experiment.trials", 200);
      cfg.reject_unused();
      table = run_checked([&] { return sde::max_stable_scaling(noise.alpha, ns, trials, seed); });
    } else if (kind == "tail") {
      sde::TailProbeConfig c;
      c.drift = drift_from_config(cfg, p);
      c.noise = noise;
      c.p = p;
      c.t = cfg.get_double("experiment.t", 1.0);
      c.eta = cfg.get_double("experiment.eta", 0.0);
      c.replicas = cfg.get_u64("experiment.replicas", 100000);
      c.seed = seed;
      c.init_scale = init_scale;
      c.hill_fraction = cfg.get_double("experiment.hill_fraction", 0.01);
      cfg.reject_unused();
      tail = run_checked([&] { return sde::second_moment_divergence_probe(c); });
    } else {
      throw ConfigError("experiment.kind", "expected euler, poc, iid, maxstable or tail");
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return kExitRunFailure;
  }

  try {
    fs::create_directories(out_dir);
    write_text(out_dir / "manifest.cfg", manifest_text(cfg, ""));
    if (table) {
      table->write_csv(out_dir / "table.csv");
      table->write_plot_tsv(out_dir / "plot.tsv");
      log << fmt::format("{} experiment ({}):\n", kind, table->note.empty() ? "no notes" : table->note);
      for (const auto& r : table->rows) {
        log << fmt::format("  {}={:<10g} {}={:.6g} iqr={:.3g}\n", table->x_name, r.x, table->statistic, r.value, r.iqr);
      }
      log << fmt::format("  log-log slope {:.4f}\n", table->slope);
    } else if (tail) {
      CsvTable t;
      t.header = {"hill_index", "hill_k", "dominance_ratio", "dominance_threshold", "heavy_tailed"};
      t.rows.push_back({format_double(tail->hill_index), std::to_string(tail->hill_k),
                        format_double(tail->dominance_ratio), format_double(tail->dominance_threshold),
                        tail->heavy_tailed() ? "true" : "false"});
      write_csv(out_dir / "tail.csv", t);
      std::ofstream tsv(out_dir / "second_moment.tsv", std::ios::binary);
      tsv << "replicas\tsecond_moment\n";
      for (const auto& [count, m2] : tail->running_second_moment) tsv << count << '\t' << format_double(m2) << '\n';
      log << fmt::format("tail probe: Hill index {:.4f} (k={}), dominance {:.3g} vs threshold {:.3g}\n",
                         tail->hill_index, tail->hill_k, tail->dominance_ratio, tail->dominance_threshold);
    }
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return kExitRunFailure;
  }
  return kExitOk;
}

int report_command(const fs::path& dir, std::ostream& out) {
  if (!fs::is_directory(dir)) {
    out << "no results directory at " << dir.string() << '\n';
    return kExitRunFailure;
  }
  std::vector<fs::path> candidates{dir};
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && entry.path().filename() != "plots" && entry.path().filename() != "checkpoints") {
      subdirs.push_back(entry.path());
    }
  }
  std::sort(subdirs.begin(), subdirs.end());
  candidates.insert(candidates.end(), subdirs.begin(), subdirs.end());

  std::vector<std::vector<std::string>> rows{
      {"run", "alpha", "Train Acc.", "Test Acc.", "Pruning Ratio", "Train Acc. a.p.", "Test Acc. a.p."}};
  std::vector<std::string> sde_blocks;
  std::size_t complete = 0;

  for (const auto& d : candidates) {
    const std::string name = d == dir ? std::string(".") : d.filename().string();
    if (fs::exists(d / "results.csv")) {
      try {
        const auto t = read_csv(d / "results.csv");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
          const auto completed = std::stoul(t.rows[r][t.column("completed")]);
          const auto repeats = std::stoul(t.rows[r][t.column("repeats")]);
          const bool sd = completed > 1;
          std::vector<std::string> row{name, t.rows[r][t.column("label")]};
          row.push_back(cell(read_mean_sd(t, r, "train_acc"), 3, sd));
          row.push_back(cell(read_mean_sd(t, r, "test_acc"), 3, sd));
          row.push_back(cell(read_mean_sd(t, r, "pruning_ratio"), 2, sd));
          row.push_back(cell(read_mean_sd(t, r, "train_acc_ap"), 3, sd));
          row.push_back(cell(read_mean_sd(t, r, "test_acc_ap"), 3, sd));
          if (completed < repeats) row[0] += fmt::format(" (incomplete {}/{})", completed, repeats);
          rows.push_back(std::move(row));
          ++complete;
        }
      } catch (const std::exception& e) {
        rows.push_back({name, "incomplete", e.what(), "", "", "", ""});
      }
    } else if (fs::exists(d / "table.csv")) {
      try {
        const auto t = read_csv(d / "table.csv");
        std::vector<std::vector<std::string>> trows{{t.header[0], t.header[1], "iqr"}};
        std::string slope = "nan";
        fs::create_directories(dir / "plots");
        std::ofstream tsv(dir / "plots" / (name == "." ? std::string("table.tsv") : name + ".tsv"), std::ios::binary);
        tsv << "log_" << t.header[0] << '\t' << "log_" << t.header[1] << '\n';
        for (const auto& r : t.rows) {
          trows.push_back({short_number(r[0]), short_number(r[1]), short_number(r[2])});
          slope = short_number(r[3]);
          const double x = parse_double(r[0]);
          const double y = parse_double(r[1]);
          if (x > 0.0 && y > 0.0) tsv << format_double(std::log(x)) << '\t' << format_double(std::log(y)) << '\n';
        }
        sde_blocks.push_back(name + " (log-log slope " + slope + ")\n" + render_table(trows));
        ++complete;
      } catch (const std::exception& e) {
        sde_blocks.push_back(name + ": incomplete (" + e.what() + ")\n");
      }
    } else if (fs::exists(d / "tail.csv")) {
      const auto t = read_csv(d / "tail.csv");
      std::vector<std::vector<std::string>> trows{t.header};
      for (const auto& r : t.rows) {
        std::vector<std::string> row;
        for (const auto& v : r) row.push_back(short_number(v));
        trows.push_back(std::move(row));
      }
      sde_blocks.push_back(name + "\n" + render_table(trows));
      ++complete;
    } else if (fs::exists(d / "manifest.cfg")) {
      rows.push_back({name, "incomplete", "-", "-", "-", "-", "-"});
    }
  }

  if (rows.size() > 1) out << render_table(rows);
  for (const auto& block : sde_blocks) out << '\n' << block;
  if (complete == 0) {
    if (rows.size() == 1) out << render_table(rows);
    out << "no complete results under " << dir.string() << '\n';
    return kExitRunFailure;
  }
  return kExitOk;
}

}  // namespace htsgd
