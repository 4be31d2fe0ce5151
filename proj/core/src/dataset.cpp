#include "htsgd/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "htsgd/csv.hpp"
#include "htsgd/errors.hpp"
#include "htsgd/random_stream.hpp"

namespace htsgd {

namespace {

constexpr std::size_t kEcgLength = 140;
constexpr std::uint32_t kIdxImagesMagic = 0x00000803u;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801u;
constexpr std::size_t kCifarPixels = 3072;

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& what) {
  if (offset + 4 > bytes.size()) throw FormatError(what + ": truncated header", offset);
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<std::string> tokenize_ecg(const std::string& line) {
  std::vector<std::string> out;
  std::string current;
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t' || c == '\r') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<std::filesystem::path> ecg_files(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) {
    if (!std::filesystem::exists(path)) throw std::runtime_error("ECG5000 data not found at " + path.string());
    return {path};
  }
  std::vector<std::filesystem::path> out;
  for (const char* part : {"ECG5000_TRAIN", "ECG5000_TEST"}) {
    bool found = false;
    for (const char* ext : {".txt", ".tsv", ".csv", ""}) {
      const auto candidate = path / (std::string(part) + ext);
      if (std::filesystem::is_regular_file(candidate)) {
        out.push_back(candidate);
        found = true;
        break;
      }
    }
    if (!found) throw std::runtime_error("missing " + std::string(part) + " in " + path.string());
  }
  return out;
}

Dataset concat(const std::vector<Dataset>& parts) {
  Dataset out;
  std::size_t rows = 0;
  for (const auto& p : parts) rows += p.size();
  const auto d = parts.empty() ? 0 : parts.front().features.cols();
  out.features.resize(static_cast<Eigen::Index>(rows), d);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.features.middleRows(r, p.features.rows()) = p.features;
    r += p.features.rows();
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    out.num_classes = std::max(out.num_classes, p.num_classes);
  }
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DomainError("dataset '" + name + "': feature rows and labels differ in count");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw DomainError("dataset '" + name + "': label " + std::to_string(y) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
  }
  if (!features.allFinite()) throw DomainError("dataset '" + name + "': non-finite feature");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.name = name;
  out.num_classes = num_classes;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= size()) throw DomainError("subset index out of range");
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(indices[r]));
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

Standardizer Standardizer::fit(const Dataset& data) {
  if (data.size() == 0) throw DomainError("cannot fit standardiser on an empty dataset");
  Standardizer s;
  s.mean = data.features.colwise().mean();
  const Eigen::MatrixXd centred = data.features.rowwise() - s.mean;
  s.scale = (centred.array().square().colwise().sum() / static_cast<double>(data.size())).sqrt().matrix();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
  }
  return s;
}

void Standardizer::apply(Dataset& data) const {
  if (data.features.cols() != mean.size()) throw DomainError("standardiser dimension mismatch");
  data.features = ((data.features.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

Dataset read_ecg_rows(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::vector<double> values;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  int max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = tokenize_ecg(line);
    if (tokens.empty()) continue;
    if (tokens.size() != kEcgLength + 1) {
      throw ParseError(file.filename().string() + ": expected " + std::to_string(kEcgLength + 1) + " fields, got " +
                           std::to_string(tokens.size()),
                       line_no);
    }
    double label_value = 0.0;
    try {
      label_value = parse_double(tokens[0]);
      for (std::size_t j = 1; j < tokens.size(); ++j) {
        const double v = parse_double(tokens[j]);
        if (!std::isfinite(v)) throw DomainError("non-finite value '" + tokens[j] + "'");
        values.push_back(v);
      }
    } catch (const DomainError& e) {
      throw ParseError(file.filename().string() + ": " + e.what(), line_no);
    }
    const double rounded = std::round(label_value);
    if (rounded != label_value || rounded < 0) {
      throw ParseError(file.filename().string() + ": label must be a non-negative integer", line_no);
    }
    labels.push_back(static_cast<int>(rounded));
    max_label = std::max(max_label, labels.back());
  }
  Dataset out;
  out.name = "ecg5000";
  out.num_classes = static_cast<std::size_t>(max_label) + 1;
  out.labels = std::move(labels);
  out.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(out.labels.size()), static_cast<Eigen::Index>(kEcgLength));
  return out;
}

DatasetSplit load_ecg5000(const std::filesystem::path& path, std::uint64_t split_seed, std::size_t train_count) {
  std::vector<Dataset> parts;
  for (const auto& f : ecg_files(path)) parts.push_back(read_ecg_rows(f));
  Dataset pool = concat(parts);
  pool.name = "ecg5000";
  for (int& y : pool.labels) y = (y == 1) ? 0 : 1;
  pool.num_classes = 2;
  if (pool.size() <= train_count) {
    throw DomainError("ECG5000 pool has " + std::to_string(pool.size()) + " rows; need more than " +
                      std::to_string(train_count));
  }
  DatasetSplit split = random_split(pool, train_count, derive_seed(split_seed, "ecg5000-split"));
  const auto scaler = Standardizer::fit(split.train);
  scaler.apply(split.train);
  scaler.apply(split.test);
  split.train.name = "ecg5000-train";
  split.test.name = "ecg5000-test";
  return split;
}

Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_bytes(images_path);
  const auto label_bytes = read_bytes(labels_path);

  const auto image_magic = read_be32(images, 0, images_path.filename().string());
  if (image_magic != kIdxImagesMagic) throw FormatError("IDX images: bad magic", 0);
  const auto count = read_be32(images, 4, "IDX images");
  const auto rows = read_be32(images, 8, "IDX images");
  const auto cols = read_be32(images, 12, "IDX images");
  const std::size_t pixels = std::size_t{rows} * cols;
  const std::size_t image_payload = 16 + std::size_t{count} * pixels;
  if (images.size() < image_payload) throw FormatError("IDX images: truncated payload", images.size());

  const auto label_magic = read_be32(label_bytes, 0, labels_path.filename().string());
  if (label_magic != kIdxLabelsMagic) throw FormatError("IDX labels: bad magic", 0);
  const auto label_count = read_be32(label_bytes, 4, "IDX labels");
  if (label_count != count) throw FormatError("IDX labels: count does not match images", 4);
  if (label_bytes.size() < 8 + std::size_t{label_count}) {
    throw FormatError("IDX labels: truncated payload", label_bytes.size());
  }

  Dataset out;
  out.name = "mnist";
  out.num_classes = 10;
  out.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  out.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t base = 16 + i * pixels;
    for (std::size_t j = 0; j < pixels; ++j) {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = images[base + j] / 255.0;
    }
    const int y = label_bytes[8 + i];
    if (y > 9) throw FormatError("IDX labels: label outside 0..9", 8 + i);
    out.labels[i] = y;
  }
  return out;
}

Dataset load_cifar10_bin(std::span<const std::filesystem::path> batch_files) {
  constexpr std::size_t record = kCifarPixels + 1;
  std::vector<Dataset> parts;
  for (const auto& file : batch_files) {
    const auto bytes = read_bytes(file);
    if (bytes.size() % record != 0) {
      throw FormatError(file.filename().string() + ": truncated CIFAR-10 record", bytes.size() - bytes.size() % record);
    }
    Dataset part;
    part.num_classes = 10;
    const std::size_t count = bytes.size() / record;
    part.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(kCifarPixels));
    part.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t base = i * record;
      if (bytes[base] > 9) throw FormatError(file.filename().string() + ": label outside 0..9", base);
      part.labels[i] = bytes[base];
      for (std::size_t j = 0; j < kCifarPixels; ++j) {
        part.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = bytes[base + 1 + j] / 255.0;
      }
    }
    parts.push_back(std::move(part));
  }
  Dataset out = concat(parts);
  out.name = "cifar10";
  out.num_classes = 10;
  return out;
}

Dataset synthetic_mixture(std::size_t d, std::size_t l, std::size_t per_class, std::uint64_t seed, double separation) {
  if (d == 0 || l == 0 || per_class == 0) throw DomainError("synthetic mixture needs d, l, per_class >= 1");
  if (d < l) throw DomainError("synthetic mixture needs d >= l to place class means on a simplex");
  RandomStream stream(derive_seed(seed, "synthetic-mixture"), 0);
  const double offset = separation / std::sqrt(2.0);
  Dataset out;
  out.name = "synthetic";
  out.num_classes = l;
  out.features.resize(static_cast<Eigen::Index>(l * per_class), static_cast<Eigen::Index>(d));
  out.labels.reserve(l * per_class);
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < l; ++k) {
    for (std::size_t i = 0; i < per_class; ++i, ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        out.features(r, static_cast<Eigen::Index>(j)) = stream.next_normal() + (j == k ? offset : 0.0);
      }
      out.labels.push_back(static_cast<int>(k));
    }
  }
  return out;
}

DatasetSplit random_split(const Dataset& data, std::size_t train_count, std::uint64_t seed) {
  if (train_count > data.size()) throw DomainError("train split larger than dataset");
  const auto perm = seeded_permutation(data.size(), seed);
  const std::span<const std::size_t> all(perm);
  DatasetSplit out{data.subset(all.first(train_count)), data.subset(all.subspan(train_count))};
  return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t m, std::uint64_t seed) {
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RandomStream stream(seed, 0);
  for (std::size_t i = m; i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.next_below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::vector<std::vector<std::size_t>> batches(std::size_t m, std::size_t batch_size, std::uint64_t epoch_seed) {
  if (batch_size == 0) throw DomainError("batch size must be >= 1");
  if (batch_size > m) throw DomainError("batch size larger than dataset");
  const auto perm = seeded_permutation(m, epoch_seed);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < m; start += batch_size) {
    const std::size_t stop = std::min(m, start + batch_size);
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start), perm.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return out;
}

}  // namespace htsgd
