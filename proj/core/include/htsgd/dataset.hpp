#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace htsgd {

/// Labelled feature matrix: one sample per row of `features` (m x d).
struct Dataset {
  std::string name;
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  /// Throws DomainError on label/row mismatch, out-of-range labels or non-finite features.
  void validate() const;
  /// Rows selected by `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/// Per-feature affine standardisation fitted on one dataset and applied to others.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  ///< standard deviation, 1 where a feature is constant

  static Standardizer fit(const Dataset& data);
  void apply(Dataset& data) const;
};

/// ECG5000: text rows of 141 numeric fields (label first, then 140 samples),
/// separated by commas and/or whitespace. `path` is either a single file or a
/// directory holding ECG5000_TRAIN and ECG5000_TEST (.txt/.tsv/.csv or no
/// extension); all rows are pooled. Labels fold to 0 = normal (source class 1)
/// and 1 = abnormal (classes 2-5). The pool is shuffled with `split_seed`, the
/// first `train_count` rows become the training set, and both splits are
/// standardised with training statistics.
DatasetSplit load_ecg5000(const std::filesystem::path& path, std::uint64_t split_seed = 0,
                          std::size_t train_count = 500);
/// Parses ECG5000-format rows from one file without folding, shuffling or scaling;
/// labels are the raw source classes.
Dataset read_ecg_rows(const std::filesystem::path& file);

/// MNIST IDX pair (magic 0x00000803 images, 0x00000801 labels, big-endian
/// header). Pixels are scaled to [0, 1].
Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// CIFAR-10 binary batches: 3073-byte records (label byte + 3072 pixel bytes),
/// pixels scaled to [0, 1].
Dataset load_cifar10_bin(std::span<const std::filesystem::path> batch_files);

/// Gaussian blobs with unit covariance, one per class, centred at
/// (separation / sqrt 2) * e_k so that class means are `separation` apart.
/// Requires d >= l.
Dataset synthetic_mixture(std::size_t d, std::size_t l, std::size_t per_class, std::uint64_t seed,
                          double separation = 10.0);

/// Seeded random split into (train, test) with `train_count` training rows.
DatasetSplit random_split(const Dataset& data, std::size_t train_count, std::uint64_t seed);

/// Seeded permutation of [0, m) cut into contiguous batches; the final batch
/// may be short.
std::vector<std::vector<std::size_t>> batches(std::size_t m, std::size_t batch_size, std::uint64_t epoch_seed);

/// Fisher-Yates permutation of [0, m) driven by a RandomStream on (seed, 0).
std::vector<std::size_t> seeded_permutation(std::size_t m, std::uint64_t seed);

}  // namespace htsgd
