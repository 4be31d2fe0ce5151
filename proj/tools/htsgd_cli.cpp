#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <curl/curl.h>
#include <fmt/format.h>
#include <openssl/evp.h>
#include <zlib.h>

#include "htsgd/checkpoint.hpp"
#include "htsgd/config.hpp"
#include "htsgd/csv.hpp"
#include "htsgd/errors.hpp"
#include "htsgd/prune.hpp"
#include "htsgd/runner.hpp"

namespace fs = std::filesystem;
using namespace htsgd;

namespace {

std::string md5_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_md5(), nullptr);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::size_t append_bytes(char* ptr, std::size_t size, std::size_t count, void* user) {
  static_cast<std::string*>(user)->append(ptr, size * count);
  return size * count;
}

std::optional<std::string> download(const std::string& url, std::string& error) {
  CURL* curl = curl_easy_init();
  if (!curl) {
    error = "curl init failed";
    return std::nullopt;
  }
  std::string body;
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 20L);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, append_bytes);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
  const CURLcode rc = curl_easy_perform(curl);
  curl_easy_cleanup(curl);
  if (rc != CURLE_OK) {
    error = curl_easy_strerror(rc);
    return std::nullopt;
  }
  return body;
}

std::optional<std::string> gunzip(const std::string& gz) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) return std::nullopt;
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(gz.data()));
  zs.avail_in = static_cast<uInt>(gz.size());
  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  while (rc == Z_OK) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    out.append(buf, sizeof(buf) - zs.avail_out);
  }
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) return std::nullopt;
  return out;
}

int fetch_mnist(const fs::path& dir) {
  struct Resource {
    const char* name;
    const char* md5;
  };
  const Resource resources[] = {{"train-images-idx3-ubyte", "f68b3c2dcbeaaa9fbdd348bbdeb94873"},
                                {"train-labels-idx1-ubyte", "d53e105ee54ea40749a09fcbcd1e9432"},
                                {"t10k-images-idx3-ubyte", "9fb629c4189551a2d022fa330f9573f3"},
                                {"t10k-labels-idx1-ubyte", "ec29112dd5afa0611ce80d1b7f02629c"}};
  const char* mirrors[] = {"https://ossci-datasets.s3.amazonaws.com/mnist/", "http://yann.lecun.com/exdb/mnist/"};
  fs::create_directories(dir);
  curl_global_init(CURL_GLOBAL_DEFAULT);
  int status = kExitOk;
  for (const auto& r : resources) {
    if (fs::exists(dir / r.name)) {
      std::cout << r.name << ": present\n";
      continue;
    }
    bool done = false;
    for (const char* mirror : mirrors) {
      const std::string url = std::string(mirror) + r.name + ".gz";
      std::string error;
      const auto gz = download(url, error);
      if (!gz) {
        std::cerr << url << ": " << error << '\n';
        continue;
      }
      const auto digest = md5_hex(*gz);
      if (digest != r.md5) {
        std::cerr << url << ": checksum mismatch (" << digest << ")\n";
        continue;
      }
      const auto raw = gunzip(*gz);
      if (!raw) {
        std::cerr << url << ": corrupt gzip stream\n";
        continue;
      }
      std::ofstream(dir / r.name, std::ios::binary) << *raw;
      std::cout << r.name << ": ok\n";
      done = true;
      break;
    }
    if (!done) status = kExitRunFailure;
  }
  curl_global_cleanup();
  return status;
}

int check_manual(const std::string& name, const fs::path& dir, const std::vector<std::string>& files,
                 const std::string& instructions) {
  bool ok = true;
  for (const auto& f : files) {
    const bool present = fs::exists(dir / f);
    std::cout << f << ": " << (present ? "present" : "missing") << '\n';
    ok = ok && present;
  }
  if (!ok) {
    std::cout << name << " must be placed in " << dir.string() << " by hand:\n" << instructions << '\n';
    return kExitRunFailure;
  }
  return kExitOk;
}

int fetch_data(const std::string& name, const fs::path& target) {
  if (name == "mnist") return fetch_mnist(target.empty() ? data_root() / "mnist" : target);
  if (name == "ecg5000") {
    const fs::path dir = target.empty() ? data_root() / "ecg5000" : target;
    return check_manual(name, dir, {"ECG5000_TRAIN.txt", "ECG5000_TEST.txt"},
                        "  download ECG5000.zip from https://www.timeseriesclassification.com/ and unzip the\n"
                        "  ECG5000_TRAIN.txt / ECG5000_TEST.txt files (141 columns, label first) into that directory.");
  }
  if (name == "cifar10") {
    const fs::path dir = target.empty() ? data_root() / "cifar-10-batches-bin" : target;
    return check_manual(name, dir,
                        {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin",
                         "data_batch_5.bin", "test_batch.bin"},
                        "  download cifar-10-binary.tar.gz from https://www.cs.toronto.edu/~kriz/cifar.html\n"
                        "  and extract the cifar-10-batches-bin files into that directory.");
  }
  std::cerr << "unknown dataset '" << name << "' (expected mnist, ecg5000 or cifar10)\n";
  return kExitConfigError;
}

int prune_command(const fs::path& checkpoint, double epsilon, const std::vector<double>& kappas,
                  const fs::path& config_path, const fs::path& csv_path) {
  NetworkParams params(NetworkShape{});
  try {
    params = load_checkpoint(checkpoint);
  } catch (const std::exception& e) {
    std::cerr << "cannot read checkpoint: " << e.what() << '\n';
    return kExitRunFailure;
  }
  std::optional<DatasetSplit> data;
  if (!config_path.empty()) {
    try {
      const auto cfg = FlatConfig::load(config_path);
      data = load_dataset(parse_experiment_config(cfg).dataset);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfigError;
    } catch (const std::exception& e) {
      std::cerr << "cannot load dataset: " << e.what() << '\n';
      return kExitRunFailure;
    }
  }

  CsvTable table;
  table.header = {"kappa", "kept", "rel_error", "pruning_ratio", "train_acc", "test_acc"};
  try {
    const double ratio = pruning_ratio(params, epsilon);
    std::vector<double> ks = kappas;
    ks.insert(ks.begin(), 1.0 - ratio / 100.0);
    for (double kappa : ks) {
      if (!(kappa > 0.0 && kappa <= 1.0)) throw DomainError("kappa must lie in (0, 1]");
      const auto [pruned, report] = prune_topk(params, kappa);
      std::string train_acc = "", test_acc = "";
      if (data) {
        const auto acc = evaluate_pruned(params, data->train, data->test, KeepRatio{kappa});
        train_acc = format_double(acc.train_acc);
        test_acc = format_double(acc.test_acc);
      }
      table.rows.push_back({format_double(kappa), std::to_string(report.kept.size()), format_double(report.rel_error),
                            format_double(report.pruning_ratio), train_acc, test_acc});
    }
    std::cout << fmt::format("pruning ratio at epsilon={}: {:.2f}%\n", epsilon, ratio);
  } catch (const DomainError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "prune failed: " << e.what() << '\n';
    return kExitRunFailure;
  }
  if (csv_path.empty()) {
    write_csv(std::cout, table);
  } else {
    write_csv(csv_path, table);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-tailed SGD compressibility experiments"};
  app.require_subcommand(1);

  fs::path run_config, run_out;
  auto* run = app.add_subcommand("run", "train, prune and evaluate the configured network over all seeds");
  run->add_option("config", run_config, "experiment config")->required();
  run->add_option("-o,--output", run_out, "override run.output_dir");

  fs::path sde_config, sde_out;
  auto* sde = app.add_subcommand("sde-run", "run a particle-system SDE experiment");
  sde->add_option("config", sde_config, "experiment config")->required();
  sde->add_option("-o,--output", sde_out, "override run.output_dir");

  fs::path report_dir;
  auto* report = app.add_subcommand("report", "render result tables and plot data");
  report->add_option("dir", report_dir, "results directory")->required();

  fs::path ckpt, prune_config, prune_csv;
  double epsilon = 0.1;
  std::vector<double> kappas;
  auto* prune = app.add_subcommand("prune", "prune a checkpoint by column norm");
  prune->add_option("checkpoint", ckpt, "checkpoint file")->required();
  prune->add_option("--epsilon", epsilon, "relative compression error budget")->capture_default_str();
  prune->add_option("--kappa", kappas, "extra kept ratios to report");
  prune->add_option("--config", prune_config, "experiment config naming the dataset for accuracies");
  prune->add_option("--csv", prune_csv, "write the report to this file instead of stdout");

  std::string dataset;
  fs::path fetch_dir;
  auto* fetch = app.add_subcommand("fetch-data", "download or verify a dataset under the data root");
  fetch->add_option("name", dataset, "mnist | ecg5000 | cifar10")->required();
  fetch->add_option("--dir", fetch_dir, "target directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  if (*run) return run_command(run_config, std::cout, std::cerr, run_out);
  if (*sde) return sde_run_command(sde_config, std::cout, std::cerr, sde_out);
  if (*report) return report_command(report_dir, std::cout);
  if (*prune) return prune_command(ckpt, epsilon, kappas, prune_config, prune_csv);
  if (*fetch) return fetch_data(dataset, fetch_dir);
  return kExitConfigError;
}
