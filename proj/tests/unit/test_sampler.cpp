#include "mnls/sampler.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace mnls;
using namespace mnls::sampler;

namespace {

model::CovarianceModel identity_model(std::size_t d) {
  return model::CovarianceModel(Vector::Ones(static_cast<Eigen::Index>(d)), model::OrthogonalBasis::identity(d), 0);
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double excess_kurtosis = 0.0;
};

Moments moments(const EntryLaw& law, std::size_t count, std::uint64_t seed) {
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double x = law.sample(seed, i / 64, static_cast<std::uint32_t>(i % 64), StreamRole::Design);
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  const double c = static_cast<double>(count);
  Moments m;
  m.mean = s1 / c;
  m.var = s2 / c - m.mean * m.mean;
  m.excess_kurtosis = (s4 / c) / (m.var * m.var) - 3.0;
  return m;
}

}  // namespace

TEST(EntryLaw, StandardizedMoments) {
  for (const auto& law : {EntryLaw::gaussian(), EntryLaw::rademacher(), EntryLaw::uniform(), EntryLaw::student_t(7)}) {
    const auto m = moments(law, 400000, 17);
    EXPECT_NEAR(m.mean, 0.0, 0.01) << law.name();
    EXPECT_NEAR(m.var, 1.0, 0.02) << law.name();
  }
}

TEST(EntryLaw, RademacherAndUniformSupport) {
  const auto r = EntryLaw::rademacher();
  const auto u = EntryLaw::uniform();
  for (std::uint32_t k = 0; k < 2000; ++k) {
    const double x = r.sample(3, 0, k, StreamRole::Design);
    EXPECT_TRUE(x == 1.0 || x == -1.0);
    EXPECT_LE(std::abs(u.sample(3, 0, k, StreamRole::Design)), std::sqrt(3.0));
  }
}

TEST(EntryLaw, StudentTHasPositiveExcessKurtosis) {
  const auto m = moments(EntryLaw::student_t(5), 1000000, 5);
  EXPECT_GT(m.excess_kurtosis, 0.0);
  EXPECT_FALSE(EntryLaw::student_t(5).sub_gaussian());
  EXPECT_TRUE(EntryLaw::gaussian().sub_gaussian());
}

TEST(EntryLaw, ParseAndErrors) {
  EXPECT_EQ(EntryLaw::parse("rademacher"), EntryLaw::rademacher());
  EXPECT_EQ(EntryLaw::parse("student_t", 9).df, 9);
  EXPECT_THROW(EntryLaw::parse("cauchy"), DomainError);
  EXPECT_THROW(EntryLaw::student_t(4), DomainError);
}

TEST(SampleDesign, BitIdenticalRepeats) {
  const auto m = model::equicorrelated(40, 0.3);
  const auto a = sample_design(m, 12, EntryLaw::gaussian(), 77);
  const auto b = sample_design(m, 12, EntryLaw::gaussian(), 77);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())), 0);
  const auto c = sample_design(m, 12, EntryLaw::gaussian(), 78);
  EXPECT_GT((a - c).norm(), 0.0);
}

TEST(SampleDesign, RowsIndependentOfOtherRows) {
  const auto m = model::equicorrelated(30, 0.5);
  const auto small = sample_design(m, 3, EntryLaw::uniform(), 5);
  const auto large = sample_design(m, 50, EntryLaw::uniform(), 5);
  EXPECT_EQ(Matrix(small), Matrix(large.topRows(3)));
  const auto z = sample_z(50, 30, EntryLaw::uniform(), 5);
  for (std::uint32_t k = 0; k < 30; ++k) {
    EXPECT_EQ(z(17, k), EntryLaw::uniform().sample(5, 17, k, StreamRole::Design));
  }
}

TEST(SampleDesign, IdentityModelMoments) {
  const std::size_t n = 100000;
  const auto x = sample_design(identity_model(3), n, EntryLaw::gaussian(), 2024);
  const double tol_mean = 4.0 * std::pow(10.0, -2.5) * 3.0;
  for (Eigen::Index k = 0; k < 3; ++k) {
    const double mean = x.col(k).mean();
    const double var = (x.col(k).array() - mean).square().mean();
    EXPECT_LT(std::abs(mean), tol_mean);
    EXPECT_LT(std::abs(var - 1.0), 0.05);
  }
}

TEST(SampleDesign, IdentityEmpiricalCovariance) {
  const std::size_t n = 100000;
  for (std::size_t d : {2u, 5u, 8u}) {
    const auto x = sample_design(identity_model(d), n, EntryLaw::gaussian(), 31 + d);
    const Matrix cov = Matrix(x).transpose() * Matrix(x) / static_cast<double>(n);
    const double dev = (cov - Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)))
                           .cwiseAbs()
                           .maxCoeff();
    EXPECT_LT(dev, 5.0 * std::sqrt(static_cast<double>(d) / n) * 3.0) << "d=" << d;
  }
}

TEST(SampleDesign, EquicorrelatedOffDiagonal) {
  const std::size_t n = 10000;
  const std::size_t d = 50;
  const auto x = sample_design(model::equicorrelated(d, 0.5), n, EntryLaw::gaussian(), 9);
  const Matrix cov = Matrix(x).transpose() * Matrix(x) / static_cast<double>(n);
  double off = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      if (i != k) off += cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
  }
  off /= static_cast<double>(d * (d - 1));
  EXPECT_LT(std::abs(off - 0.5), 0.025);
}

TEST(SampleDesign, MatchesDenseSquareRootConstruction) {
  const auto m = model::realize(
      model::SpikeSpec{{{2.0, 1.0, 0.0}}, {1.0, 0.5}, {1.0, 2.0}}, 4, {model::BasisSpec::Kind::Householder, 3, 4});
  const auto x = sample_design(m, 4, EntryLaw::gaussian(), 11);
  const auto z = sample_z(4, m.dimension(), EntryLaw::gaussian(), 11);
  const Matrix u = m.basis().dense();
  const Matrix expected = Matrix(z) * m.eigenvalues().cwiseSqrt().asDiagonal() * u.transpose();
  EXPECT_LT((Matrix(x) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SampleLabels, NoiselessAndNoiseOnly) {
  const auto m = model::equicorrelated(20, 0.5);
  const auto x = sample_design(m, 8, EntryLaw::gaussian(), 4);
  std::mt19937_64 rng(1);
  const Vector theta = oracle::random_vector(20, rng);
  const Vector y = sample_labels(x, theta, 0.0, EntryLaw::gaussian(), 4);
  EXPECT_EQ(y, Vector(x * theta));

  const std::size_t n = 100000;
  const DesignMatrix wide = DesignMatrix::Zero(static_cast<Eigen::Index>(n), 1);
  const Vector xi = sample_labels(wide, Vector::Zero(1), 1.0, EntryLaw::gaussian(), 8);
  const double mean = xi.mean();
  EXPECT_LT(std::abs((xi.array() - mean).square().mean() - 1.0), 0.02);
  EXPECT_EQ(xi, sample_labels(wide, Vector::Zero(1), 1.0, EntryLaw::gaussian(), 8));
}

TEST(SampleLabels, Errors) {
  const DesignMatrix x = DesignMatrix::Ones(3, 4);
  EXPECT_THROW(sample_labels(x, Vector::Zero(5), 1.0, EntryLaw::gaussian(), 0), DimensionError);
  EXPECT_THROW(sample_labels(x, Vector::Zero(4), -1.0, EntryLaw::gaussian(), 0), DomainError);
}

TEST(DesignFile, RoundTripAndHeader) {
  const auto dir = std::filesystem::temp_directory_path() / "mnls_sampler_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "x.bin";
  const auto x = sample_design(model::equicorrelated(7, 0.2), 5, EntryLaw::rademacher(), 3);
  write_design(path, x);
  EXPECT_EQ(std::filesystem::file_size(path), 32u + 5u * 7u * 8u);
  std::ifstream is(path, std::ios::binary);
  char magic[4];
  is.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "HDLS");
  const auto back = read_design(path);
  EXPECT_EQ(Matrix(back), Matrix(x));
  std::filesystem::remove_all(dir);
}

TEST(MakeDataset, CarriesProvenance) {
  auto m = std::make_shared<const model::CovarianceModel>(model::equicorrelated(30, 0.5));
  const auto theta = model::make_theta(*m, 0.0, 1.0, std::vector<double>{1.0}, 0);
  const auto data = make_dataset(m, 6, theta, 0.5, EntryLaw::gaussian(), EntryLaw::gaussian(), 21);
  ASSERT_TRUE(data.provenance.has_value());
  EXPECT_EQ(data.provenance->seed, 21u);
  EXPECT_EQ(Matrix(*data.X), Matrix(sample_design(*m, 6, EntryLaw::gaussian(), 21)));
  EXPECT_EQ(data.Y, sample_labels(*data.X, theta.theta, 0.5, EntryLaw::gaussian(), 21));
}
