#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "htsgd/errors.hpp"
#include "htsgd/random_stream.hpp"
#include "htsgd/sde_experiments.hpp"
#include "htsgd/stable.hpp"
#include "oracles.hpp"

using namespace htsgd;

TEST(Philox, KnownAnswerVectors) {
  using A = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32_10(A{0, 0, 0, 0}, {0, 0}), (A{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10(A{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (A{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10(A{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (A{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RandomStream, SameSeedAndStreamReproduce) {
  RandomStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RandomStream, StreamsDiffer) {
  RandomStream a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    same_ab += x == b.next_u64();
    same_ac += x == c.next_u64();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(RandomStream, UniformRanges) {
  RandomStream s(1, 0);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_uniform();
    const double o = s.next_open_uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GT(o, 0.0);
    ASSERT_LT(o, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
  for (int i = 0; i < 1000; ++i) ASSERT_LT(s.next_below(7), 7u);
}

TEST(RandomStream, DeriveSeedSeparatesPurposes) {
  EXPECT_NE(derive_seed(1, "init"), derive_seed(1, "noise"));
  EXPECT_NE(derive_seed(1, "init"), derive_seed(2, "init"));
  EXPECT_EQ(derive_seed(1, "init"), derive_seed(1, "init"));
}

TEST(StableSpec, Validation) {
  EXPECT_THROW((StableSpec{0.0, VectorType::TypeI, 1.0}.validate()), DomainError);
  EXPECT_THROW((StableSpec{2.1, VectorType::TypeI, 1.0}.validate()), DomainError);
  EXPECT_THROW((StableSpec{1.5, VectorType::TypeI, -1.0}.validate()), DomainError);
  EXPECT_NO_THROW((StableSpec{2.0, VectorType::TypeIII, 0.0}.validate()));
  EXPECT_EQ(parse_vector_type("III"), VectorType::TypeIII);
  EXPECT_EQ(parse_vector_type("type-ii"), VectorType::TypeII);
  EXPECT_EQ(parse_vector_type("TypeI"), VectorType::TypeI);
  EXPECT_THROW(parse_vector_type("IV"), DomainError);
}

TEST(StableScalar, RejectsBadAlpha) {
  RandomStream s(1, 0);
  EXPECT_THROW(sample_scalar(0.0, s), DomainError);
  EXPECT_THROW(sample_scalar(2.5, s), DomainError);
  EXPECT_THROW(sample_scalar(std::nan(""), s), DomainError);
}

TEST(StableScalar, GaussianAtTwoHasVarianceTwo) {
  RandomStream s(11, 0);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = sample_scalar(2.0, s);
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 2.0, 0.03);
}

TEST(StableScalar, CauchyQuartilesAtOne) {
  RandomStream s(12, 0);
  int inside = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) inside += std::abs(sample_scalar(1.0, s)) <= 1.0;
  EXPECT_NEAR(static_cast<double>(inside) / n, 0.5, 0.005);
}

TEST(StableScalar, CharacteristicFunction) {
  // E cos(wX) = exp(-|w|^alpha) for symmetric stable laws.
  for (double alpha : {0.7, 1.2, 1.5, 1.9}) {
    RandomStream s(13, 0);
    const int n = 200000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = sample_scalar(alpha, s);
    for (double w : {0.5, 1.0, 2.0}) {
      double c = 0;
      for (double x : xs) c += std::cos(w * x);
      EXPECT_NEAR(c / n, std::exp(-std::pow(w, alpha)), 0.01) << "alpha=" << alpha << " w=" << w;
    }
  }
}

TEST(StableScalar, HillIndexAtOnePointFive) {
  RandomStream s(14, 0);
  std::vector<double> xs(1000000);
  for (auto& x : xs) x = std::abs(sample_scalar(1.5, s));
  const double h = sde::hill_tail_index(xs, 2000);
  EXPECT_GE(h, 1.4);
  EXPECT_LE(h, 1.6);
}

TEST(StableScalar, StabilityUnderSums) {
  for (double alpha : {1.5, 1.9}) {
    for (int m : {4, 16}) {
      RandomStream a(15, 0), b(15, 1);
      std::vector<double> sums(100000), direct(100000);
      for (auto& v : sums) {
        double t = 0;
        for (int j = 0; j < m; ++j) t += sample_scalar(alpha, a);
        v = std::pow(m, -1.0 / alpha) * t;
      }
      for (auto& v : direct) v = sample_scalar(alpha, b);
      EXPECT_LT(oracle::ks_statistic(sums, direct), 0.01) << "alpha=" << alpha << " m=" << m;
    }
  }
}

TEST(PositiveStable, LaplaceTransform) {
  for (double a : {0.5, 0.75, 0.95}) {
    RandomStream s(16, 0);
    const int n = 200000;
    std::vector<double> xs(n);
    for (auto& x : xs) {
      x = sample_positive_stable(a, s);
      ASSERT_GT(x, 0.0);
    }
    for (double t : {0.5, 1.0, 3.0}) {
      double m = 0;
      for (double x : xs) m += std::exp(-t * x);
      EXPECT_NEAR(m / n, std::exp(-std::pow(t, a)), 0.005) << "a=" << a << " s=" << t;
    }
  }
  RandomStream s(1, 0);
  EXPECT_EQ(sample_positive_stable(1.0, s), 1.0);
}

TEST(StableVector, TypeIReplicates) {
  RandomStream s(17, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const auto v = sample_vector({1.5, VectorType::TypeI, 1.0}, 3, s);
    ASSERT_EQ(v(0), v(1));
    ASSERT_EQ(v(1), v(2));
  }
}

TEST(StableVector, DimZeroRejected) {
  RandomStream s(1, 0);
  EXPECT_THROW(sample_vector({1.5, VectorType::TypeII, 1.0}, 0, s), DomainError);
}

TEST(StableVector, TypeIIIGaussianAtTwo) {
  RandomStream s(18, 0);
  const int n = 200000;
  double v0 = 0, v1 = 0, c01 = 0;
  for (int i = 0; i < n; ++i) {
    const auto v = sample_vector({2.0, VectorType::TypeIII, 1.0}, 2, s);
    v0 += v(0) * v(0);
    v1 += v(1) * v(1);
    c01 += v(0) * v(1);
  }
  EXPECT_NEAR(v0 / n, 2.0, 0.03);
  EXPECT_NEAR(v1 / n, 2.0, 0.03);
  EXPECT_NEAR(c01 / n, 0.0, 0.03);
}

TEST(StableVector, TypeIIRankCorrelation) {
  RandomStream s(19, 0);
  std::vector<double> a(100000), b(100000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto v = sample_vector({1.75, VectorType::TypeII, 1.0}, 2, s);
    a[i] = v(0);
    b[i] = v(1);
  }
  EXPECT_LT(std::abs(oracle::spearman(a, b)), 0.01);
}

TEST(StableVector, TypeIIIProjectionIsScalarStable) {
  const double alpha = 1.5;
  Eigen::Vector3d u(1.0, -2.0, 0.5);
  u.normalize();
  RandomStream s(20, 0), t(20, 1);
  std::vector<double> proj(100000), direct(100000);
  for (auto& p : proj) p = u.dot(sample_vector({alpha, VectorType::TypeIII, 1.0}, 3, s));
  for (auto& d : direct) d = sample_scalar(alpha, t);
  EXPECT_LT(oracle::ks_statistic(proj, direct), 0.01);
}

TEST(LevyIncrement, UnitStepMatchesVector) {
  RandomStream a(21, 0), b(21, 0);
  const StableSpec spec{1.3, VectorType::TypeII, 1.0};
  for (int i = 0; i < 100; ++i) {
    const auto x = levy_increment(spec, 4, 1.0, a);
    const auto y = sample_vector(spec, 4, b);
    ASSERT_EQ(x, y);
  }
}

TEST(LevyIncrement, RejectsNonPositiveDt) {
  RandomStream s(1, 0);
  EXPECT_THROW(levy_increment({1.5, VectorType::TypeI, 1.0}, 2, 0.0, s), DomainError);
  EXPECT_THROW(levy_increment({1.5, VectorType::TypeI, 1.0}, 2, -1.0, s), DomainError);
}

TEST(LevyIncrement, GaussianVarianceScales) {
  RandomStream s(22, 0);
  const int n = 200000;
  double sq = 0;
  for (int i = 0; i < n; ++i) sq += levy_increment({2.0, VectorType::TypeIII, 1.0}, 1, 1.0 / 16, s).squaredNorm();
  EXPECT_NEAR(sq / n, 0.125, 0.002);
}

TEST(LevyIncrement, SixteenSmallStepsEqualOneBigStep) {
  const StableSpec spec{1.6, VectorType::TypeIII, 1.0};
  RandomStream a(23, 0), b(23, 1);
  std::vector<double> sums(100000), direct(100000);
  for (auto& v : sums) {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(2);
    for (int j = 0; j < 16; ++j) t += levy_increment(spec, 2, 1.0 / 16, a);
    v = t(0);
  }
  for (auto& v : direct) v = levy_increment(spec, 2, 1.0, b)(0);
  EXPECT_LT(oracle::ks_statistic(sums, direct), 0.01);
}

TEST(StableVector, DeterministicAcrossThreads) {
  const StableSpec spec{1.7, VectorType::TypeIII, 1.0};
  auto draw = [&](std::uint64_t id) {
    RandomStream s(99, id);
    std::vector<double> out;
    for (int i = 0; i < 100; ++i) {
      const auto v = sample_vector(spec, 3, s);
      out.insert(out.end(), v.data(), v.data() + 3);
    }
    return out;
  };
  std::vector<std::vector<double>> threaded(4);
  std::vector<std::thread> pool;
  for (std::uint64_t id = 0; id < 4; ++id) pool.emplace_back([&, id] { threaded[id] = draw(id); });
  for (auto& t : pool) t.join();
  for (std::uint64_t id = 0; id < 4; ++id) EXPECT_EQ(threaded[id], draw(id));
}
