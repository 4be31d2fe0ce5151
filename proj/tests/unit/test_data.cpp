#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "htsgd/dataset.hpp"
#include "htsgd/errors.hpp"
#include "oracles.hpp"

using namespace htsgd;
namespace fs = std::filesystem;

namespace {

// Writes an ECG5000-style file: `rows` lines of label + 140 values.
void write_ecg(const fs::path& path, std::size_t rows, std::size_t offset, const char* sep) {
  std::ofstream out(path);
  for (std::size_t r = 0; r < rows; ++r) {
    out << (1 + (r + offset) % 5);
    for (int j = 0; j < 140; ++j) out << sep << (static_cast<double>(r + offset) * 0.01 + j * 0.1);
    out << '\n';
  }
}

}  // namespace

TEST(Ecg, SingleRow) {
  const auto dir = oracle::temp_dir("ecg1");
  write_ecg(dir / "one.txt", 1, 0, " ");
  const auto d = read_ecg_rows(dir / "one.txt");
  EXPECT_EQ(d.size(), 1u);
  EXPECT_EQ(d.dim(), 140u);
  EXPECT_EQ(d.labels[0], 1);
  EXPECT_DOUBLE_EQ(d.features(0, 139), 13.9);
}

TEST(Ecg, CommaSeparatedAndExponents) {
  const auto dir = oracle::temp_dir("ecg2");
  {
    std::ofstream out(dir / "c.csv");
    out << "2.0000000e+00";
    for (int j = 0; j < 140; ++j) out << ",-1.5e-01";
    out << "\n";
  }
  const auto d = read_ecg_rows(dir / "c.csv");
  EXPECT_EQ(d.labels[0], 2);
  EXPECT_DOUBLE_EQ(d.features(0, 5), -0.15);
}

TEST(Ecg, MalformedRowReportsLine) {
  const auto dir = oracle::temp_dir("ecg3");
  write_ecg(dir / "bad.txt", 3, 0, " ");
  {
    std::ofstream out(dir / "bad.txt", std::ios::app);
    out << "1 2 3\n";
  }
  try {
    read_ecg_rows(dir / "bad.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  {
    std::ofstream out(dir / "nan.txt");
    out << "1";
    for (int j = 0; j < 140; ++j) out << (j == 7 ? " abc" : " 1.0");
    out << "\n";
  }
  EXPECT_THROW(read_ecg_rows(dir / "nan.txt"), ParseError);
}

TEST(Ecg, FoldSplitAndStandardise) {
  const auto dir = oracle::temp_dir("ecg4");
  write_ecg(dir / "ECG5000_TRAIN.txt", 500, 0, " ");
  write_ecg(dir / "ECG5000_TEST.txt", 4500, 500, "  ");
  const auto split = load_ecg5000(dir, 3);
  EXPECT_EQ(split.train.size(), 500u);
  EXPECT_EQ(split.test.size(), 4500u);
  EXPECT_EQ(split.train.size() + split.test.size(), 5000u);
  EXPECT_EQ(split.train.dim(), 140u);
  EXPECT_EQ(split.train.num_classes, 2u);
  std::size_t abnormal = 0;
  for (int y : split.train.labels) abnormal += y;
  for (int y : split.test.labels) abnormal += y;
  EXPECT_EQ(abnormal, 4000u);  // source classes 2..5 are 4/5 of the rows
  const Eigen::RowVectorXd mean = split.train.features.colwise().mean();
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-9);
  const auto again = load_ecg5000(dir, 3);
  EXPECT_EQ(again.train.features, split.train.features);
}

TEST(Mnist, ParsesAndMatchesIndependentReader) {
  const auto dir = oracle::temp_dir("mnist");
  std::vector<unsigned char> pixels(3 * 28 * 28), labels{7, 0, 9};
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<unsigned char>((i * 37) % 256);
  oracle::write_idx(dir / "img", 0x00000803, {3, 28, 28}, pixels);
  oracle::write_idx(dir / "lab", 0x00000801, {3}, labels);
  const auto d = load_mnist_idx(dir / "img", dir / "lab");
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 784u);
  EXPECT_EQ(d.num_classes, 10u);
  EXPECT_EQ(d.labels, (std::vector<int>{7, 0, 9}));
  std::vector<std::uint32_t> dims;
  const auto payload = oracle::idx_payload(dir / "img", dims);
  EXPECT_EQ(dims, (std::vector<std::uint32_t>{3, 28, 28}));
  for (int j = 0; j < 784; ++j) ASSERT_EQ(static_cast<unsigned char>(std::lround(d.features(0, j) * 255.0)), payload[std::size_t(j)]);
  EXPECT_LE(d.features.maxCoeff(), 1.0);
  EXPECT_GE(d.features.minCoeff(), 0.0);
}

TEST(Mnist, BadMagicAndTruncation) {
  const auto dir = oracle::temp_dir("mnist-bad");
  oracle::write_idx(dir / "img", 0x00000801, {1, 28, 28}, std::vector<unsigned char>(784));
  oracle::write_idx(dir / "lab", 0x00000801, {1}, {1});
  EXPECT_THROW(load_mnist_idx(dir / "img", dir / "lab"), FormatError);
  oracle::write_idx(dir / "img2", 0x00000803, {2, 28, 28}, std::vector<unsigned char>(784));
  try {
    load_mnist_idx(dir / "img2", dir / "lab");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_GT(e.offset(), 0u);
  }
}

TEST(Cifar, ParsesRecords) {
  const auto dir = oracle::temp_dir("cifar");
  {
    std::ofstream out(dir / "b.bin", std::ios::binary);
    for (int r = 0; r < 2; ++r) {
      out.put(static_cast<char>(r == 0 ? 3 : 8));
      for (int j = 0; j < 3072; ++j) out.put(static_cast<char>(255));
    }
  }
  const std::vector<fs::path> files{dir / "b.bin"};
  const auto d = load_cifar10_bin(files);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.dim(), 3072u);
  EXPECT_EQ(d.labels, (std::vector<int>{3, 8}));
  EXPECT_EQ(d.features.minCoeff(), 1.0);
}

TEST(Synthetic, DeterministicAndValidated) {
  const auto a = synthetic_mixture(4, 3, 20, 9);
  const auto b = synthetic_mixture(4, 3, 20, 9);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.size(), 60u);
  EXPECT_THROW(synthetic_mixture(4, 3, 0, 9), DomainError);
  EXPECT_THROW(synthetic_mixture(2, 3, 5, 9), DomainError);
}

TEST(Batches, SizesAndDeterminism) {
  const auto b = batches(10, 3, 42);
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[0].size(), 3u);
  EXPECT_EQ(b[3].size(), 1u);
  std::set<std::size_t> all;
  for (const auto& batch : b) all.insert(batch.begin(), batch.end());
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(batches(10, 3, 42), b);
  EXPECT_NE(batches(10, 3, 43), b);
  EXPECT_EQ(batches(500, 500, 1).size(), 1u);
  EXPECT_THROW(batches(5, 6, 1), DomainError);
}

TEST(Split, DisjointAndExhaustive) {
  const auto d = synthetic_mixture(2, 2, 50, 1);
  const auto s = random_split(d, 30, 5);
  EXPECT_EQ(s.train.size(), 30u);
  EXPECT_EQ(s.test.size(), 70u);
  std::multiset<double> before, after;
  for (Eigen::Index r = 0; r < d.features.rows(); ++r) before.insert(d.features(r, 0));
  for (Eigen::Index r = 0; r < 30; ++r) after.insert(s.train.features(r, 0));
  for (Eigen::Index r = 0; r < 70; ++r) after.insert(s.test.features(r, 0));
  EXPECT_EQ(before, after);
}
