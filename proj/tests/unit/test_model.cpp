#include "mnls/bounds.hpp"
#include "mnls/model.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mnls;
using namespace mnls::model;

namespace {

SpikeSpec single_spike(double scale, double c1, double c2) {
  SpikeSpec s;
  s.spike_rules = {{scale, 1.0, 0.0}};
  s.bulk = {c1, c2};
  s.dim = {1.0, 2.0};
  return s;
}

SpikeSpec three_spikes() {
  SpikeSpec s;
  s.spike_rules = {{3.0, 1.0, 0.0}, {1.0, 1.0, 0.0}, {0.4, 1.0, 0.0}};
  s.bulk = {1.0, 0.2};
  s.dim = {1.0, 2.0};
  return s;
}

}  // namespace

TEST(Realize, SingleSpikeArithmetic) {
  const auto m = realize(single_spike(0.5, 0.5, 0.5), 10);
  ASSERT_EQ(m.dimension(), 100u);
  EXPECT_DOUBLE_EQ(m.eigenvalue(1), 50.0);
  for (std::size_t j = 2; j <= 100; ++j) EXPECT_DOUBLE_EQ(m.eigenvalue(j), 0.5);
  EXPECT_EQ(m.spike_count(), 1u);
}

TEST(Realize, SpikeBelowBulkNamesIndex) {
  SpikeSpec s = single_spike(0.004, 0.5, 0.5);  // 0.004 * 100 = 0.4 < c1
  try {
    (void)realize(s, 10);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("spike 1"), std::string::npos);
  }
}

TEST(Realize, TiedSpikesRejected) {
  SpikeSpec s = three_spikes();
  s.spike_rules[2] = s.spike_rules[1];
  try {
    (void)realize(s, 10);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("spike 3"), std::string::npos);
  }
}

TEST(Realize, MatchesEquicorrelatedLeadingEigenvalue) {
  const auto m = realize(single_spike(0.5, 0.5, 0.5), 10);
  const double target = 1.0 + 99.0 * 0.5;
  EXPECT_LT(std::abs(m.eigenvalue(1) - target) / target, 0.02);
}

TEST(Realize, BulkIsLinearRamp) {
  SpikeSpec s = single_spike(1.0, 2.0, 1.0);
  const auto m = realize(s, 4);  // d = 16, bulk indices 2..16
  EXPECT_DOUBLE_EQ(m.eigenvalue(2), 2.0);
  EXPECT_DOUBLE_EQ(m.eigenvalue(16), 1.0);
  EXPECT_NEAR(m.eigenvalue(9), 2.0 - 7.0 / 14.0, 1e-15);
}

TEST(DimRule, CeilingWithoutPowNoise) {
  EXPECT_EQ((DimRule{1.0, 2.0}).dimension(10), 100u);
  EXPECT_EQ((DimRule{1.0, 2.0}).dimension(200), 40000u);
  EXPECT_EQ((DimRule{0.5, 1.5}).dimension(10), 16u);  // ceil(15.81)
}

TEST(Equicorrelated, Eigenvalues) {
  const auto m = equicorrelated(4, 0.5);
  EXPECT_DOUBLE_EQ(m.eigenvalue(1), 2.5);
  for (std::size_t j = 2; j <= 4; ++j) EXPECT_DOUBLE_EQ(m.eigenvalue(j), 0.5);
  EXPECT_EQ(m.spike_count(), 1u);
}

TEST(Equicorrelated, IdentityLimit) {
  const auto m = equicorrelated(3, 1e-12);
  for (std::size_t j = 1; j <= 3; ++j) EXPECT_NEAR(m.eigenvalue(j), 1.0, 1e-11);
}

TEST(Equicorrelated, DenseReconstruction) {
  const auto m = equicorrelated(6, 0.3);
  const Matrix s = oracle::dense_sigma(m);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index k = 0; k < 6; ++k) EXPECT_NEAR(s(i, k), i == k ? 1.0 : 0.3, 1e-10);
  }
}

TEST(Equicorrelated, DomainErrors) {
  EXPECT_THROW(equicorrelated(5, 0.0), DomainError);
  EXPECT_THROW(equicorrelated(5, 1.0), DomainError);
  EXPECT_THROW(equicorrelated(5, 1.5), DomainError);
}

TEST(Equicorrelated, LeadingDirectionAndComplement) {
  const std::size_t d = 37;
  const double a = 0.4;
  const auto m = equicorrelated(d, a);
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(d)) / std::sqrt(static_cast<double>(d));
  EXPECT_NEAR(std::abs(m.eigenvector(1).dot(ones)), 1.0, 1e-12);
  EXPECT_NEAR(m.quadratic_form(ones), 1.0 + (d - 1) * a, 1e-10);
  std::mt19937_64 rng(3);
  Vector v = oracle::random_vector(d, rng);
  v -= v.dot(ones) * ones;
  EXPECT_LT((m.apply_sigma(v) - (1.0 - a) * v).norm(), 1e-10 * v.norm());
}

TEST(CovarianceModel, DenseIsSpdWithStoredSpectrum) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto m = realize(three_spikes(), 6, {BasisSpec::Kind::Householder, seed, 5});  // d = 36
    const Matrix s = oracle::dense_sigma(m);
    EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
    const Vector got = eig.eigenvalues().reverse();
    for (std::size_t j = 1; j <= m.dimension(); ++j) {
      EXPECT_NEAR(got[static_cast<Eigen::Index>(j - 1)], m.eigenvalue(j), 1e-10 * m.eigenvalue(j));
    }
    EXPECT_GT(got.minCoeff(), 0.0);
  }
}

TEST(CovarianceModel, RejectsBadSpectra) {
  EXPECT_THROW(CovarianceModel((Vector(3) << 1.0, 2.0, 0.5).finished(), OrthogonalBasis::identity(3), 0),
               ValidationError);
  EXPECT_THROW(CovarianceModel((Vector(2) << 1.0, 0.0).finished(), OrthogonalBasis::identity(2), 0),
               ValidationError);
}

TEST(OrthogonalBasis, RoundTrip) {
  const auto u = OrthogonalBasis::householder(50, 11, 7);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 5; ++k) {
    const Vector v = oracle::random_vector(50, rng);
    EXPECT_LT((u.apply_transpose(u.apply(v)) - v).norm(), 1e-12 * v.norm());
    EXPECT_LT((u.apply(u.apply_transpose(v)) - v).norm(), 1e-12 * v.norm());
  }
  const Matrix dense = u.dense();
  EXPECT_LT((dense.transpose() * dense - Matrix::Identity(50, 50)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((dense.col(3) - u.column(4)).norm(), 1e-14);
}

TEST(ValidateHdlss, ExampleOneStylePasses) {
  SpikeSpec s = single_spike(0.5, 0.5, 0.5);
  const std::vector<std::size_t> grid{25, 50, 100};
  const auto r = validate_hdlss(s, grid);
  EXPECT_TRUE(r.all_passed());
  EXPECT_EQ(r.note, "finite-grid check only");
}

TEST(ValidateHdlss, ShrinkingDimensionFailsNamedCheck) {
  SpikeSpec s = single_spike(0.5, 0.5, 0.5);
  s.dim.power = 0.5;
  const std::vector<std::size_t> grid{25, 50, 100};
  const auto r = validate_hdlss(s, grid);
  ASSERT_NE(r.find("dim_growth"), nullptr);
  EXPECT_FALSE(r.find("dim_growth")->passed);
}

TEST(ValidateHdlss, EqualSpikesFailOrdering) {
  SpikeSpec s = three_spikes();
  s.spike_rules[1] = s.spike_rules[0];
  const std::vector<std::size_t> grid{10, 20, 40};
  const auto r = validate_hdlss(s, grid);
  EXPECT_FALSE(r.find("spike_ordering")->passed);
}

TEST(ValidateHdlss, GridPreconditions) {
  const std::vector<std::size_t> short_grid{10, 20};
  const std::vector<std::size_t> unsorted{10, 30, 20};
  EXPECT_THROW(validate_hdlss(three_spikes(), short_grid), ValidationError);
  EXPECT_THROW(validate_hdlss(three_spikes(), unsorted), ValidationError);
}

TEST(NullRisk, Examples) {
  const CovarianceModel diag((Vector(2) << 2.0, 1.0).finished(), OrthogonalBasis::identity(2), 1);
  EXPECT_DOUBLE_EQ(null_risk(diag, Vector::Ones(2)), 3.0);
  EXPECT_DOUBLE_EQ(null_risk(diag, Vector::Zero(2)), 0.0);
  const auto eq = equicorrelated(4, 0.5);
  EXPECT_NEAR(null_risk(eq, eq.eigenvector(1)), 2.5, 1e-12);
  EXPECT_THROW(null_risk(diag, Vector::Ones(3)), DimensionError);
}

TEST(NullRisk, AgreesWithDenseEigenprojectionSum) {
  const auto m = realize(three_spikes(), 7, {BasisSpec::Kind::Householder, 9, 4});  // d = 49
  std::mt19937_64 rng(8);
  const Vector theta = oracle::random_vector(m.dimension(), rng);
  const Matrix u = m.basis().dense();
  double dense = 0.0;
  for (std::size_t j = 1; j <= m.dimension(); ++j) {
    const double c = u.col(static_cast<Eigen::Index>(j - 1)).dot(theta);
    dense += m.eigenvalue(j) * c * c;
  }
  EXPECT_NEAR(null_risk(m, theta), dense, 1e-10 * dense);
}

TEST(MakeTheta, PureSpikeAndPureBulk) {
  const auto m = realize(three_spikes(), 6, {BasisSpec::Kind::Householder, 4, 3});
  const std::vector<double> w{1.0, -2.0, 0.5};
  const auto spike = make_theta(m, 0.0, 3.0, w, 1);
  EXPECT_NEAR(spike.theta.norm(), 3.0, 1e-12 * 3.0);
  EXPECT_NEAR(tail_mass(m, spike.theta)[3], 0.0, 1e-24);
  const auto bulk = make_theta(m, 1.0, 2.0, w, 1);
  for (std::size_t j = 1; j <= 3; ++j) EXPECT_NEAR(m.eigenvector(j).dot(bulk.theta), 0.0, 1e-12);
}

TEST(MakeTheta, DenseProjectionOnEquicorrelated) {
  const auto m = equicorrelated(8, 0.5);
  const std::vector<double> w{1.0};
  const auto t = make_theta(m, 0.25, 2.0, w, 17);
  const Vector u1 = Vector::Ones(8) / std::sqrt(8.0);
  EXPECT_NEAR(std::pow(u1.dot(t.theta), 2), 3.0, 1e-12);
}

TEST(MakeTheta, InvariantsOverRandomDraws) {
  const auto m = realize(three_spikes(), 5, {BasisSpec::Kind::Householder, 2, 2});
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double delta = unit(rng);
    const double norm = 0.1 + 10.0 * unit(rng);
    const std::vector<double> w{unit(rng) + 0.01, unit(rng), unit(rng)};
    const auto t = make_theta(m, delta, norm, w, rng());
    ASSERT_NEAR(t.theta.norm(), norm, 1e-12 * norm);
    ASSERT_NEAR(tail_mass(m, t.theta)[3], delta * norm * norm, 1e-12 * norm * norm);
  }
}

TEST(MakeTheta, Errors) {
  const auto m = equicorrelated(8, 0.5);
  const std::vector<double> zero{0.0};
  EXPECT_THROW(make_theta(m, 0.5, 1.0, zero, 1), DomainError);
  const std::vector<double> one{1.0};
  EXPECT_THROW(make_theta(m, 1.5, 1.0, one, 1), DomainError);
  EXPECT_THROW(make_theta(m, 0.5, 0.0, one, 1), DomainError);
}

TEST(EffectiveRank, Examples) {
  const CovarianceModel m((Vector(4) << 10.0, 1.0, 1.0, 1.0).finished(), OrthogonalBasis::identity(4), 1);
  EXPECT_DOUBLE_EQ(effective_rank(m), 1.3);
  const CovarianceModel id(Vector::Ones(7), OrthogonalBasis::identity(7), 0);
  EXPECT_DOUBLE_EQ(effective_rank(id), 7.0);
  EXPECT_NEAR(effective_rank(equicorrelated(4, 0.5)), 1.6, 1e-15);
}

TEST(SpikeGaps, LeadingRatioToMinGapStaysBounded) {
  // lambda_j / Gbar_j over j <= m_bar must not blow up along an HDLSS grid.
  const SpikeSpec s = three_spikes();
  double first = 0.0;
  for (std::size_t n : {10u, 20u, 40u, 80u}) {
    const auto m = realize(s, n);
    const std::vector<double> alphas{1.0};
    const auto g = bounds::gap_profile(m.eigenvalue_span(), 3, alphas);
    double worst = 0.0;
    for (std::size_t j = 1; j <= 3; ++j) worst = std::max(worst, m.eigenvalue(j) / g.min_gap(j));
    if (first == 0.0) first = worst;
    EXPECT_LE(worst, 2.0 * first) << "n=" << n;
  }
}
