#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "liveload/material.hpp"
#include "oracles.hpp"

using namespace liveload;

namespace {

const MaterialModel kUnit{1.0, 1.0, 2.0, 2.0};

TEST(GMixed, Branches) {
  for (double r : {1.0, 1.5, 2.0}) {
    EXPECT_EQ(g_mixed(0.0, r), 0.0);
    EXPECT_DOUBLE_EQ(g_mixed(1.0, r), 0.5);
    EXPECT_DOUBLE_EQ(g_mixed(0.5, r), 0.125);
  }
  EXPECT_NEAR(g_mixed(2.0, 1.5), std::pow(2.0, 1.5) / 1.5 + 0.5 - 1.0 / 1.5, 1e-15);
  EXPECT_NEAR(g_mixed(2.0, 1.5), 1.718951, 1e-6);
  EXPECT_THROW(g_mixed(-0.1, 2.0), ValidationError);
}

TEST(GMixed, DerivativeIsContinuousAtOne) {
  for (double r : {1.0, 1.3, 2.0}) {
    EXPECT_NEAR(g_mixed_derivative(1.0 - 1e-12, r), g_mixed_derivative(1.0 + 1e-12, r), 1e-10);
  }
}

TEST(DistSO2, Examples) {
  EXPECT_LE(dist_SO2(rotation(2.1)), 1e-15);
  EXPECT_NEAR(dist_SO2(2.0 * Mat2::Identity()), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(dist_SO2(2.0 * Mat2::Identity()), oracle::dist_to_rotations(2.0 * Mat2::Identity()), 1e-10);
  EXPECT_NEAR(dist_SO2(Mat2::Zero()), std::sqrt(2.0), 1e-15);
}

TEST(DistSO2, MatchesScanIncludingReflections) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 40; ++k) {
    Mat2 F;
    F << u(rng), u(rng), u(rng), u(rng);
    EXPECT_NEAR(dist_SO2(F), oracle::dist_to_rotations(F), 1e-9) << F;
  }
}

TEST(ClosestRotation, IsTheMinimizer) {
  Mat2 F;
  F << 1.2, -0.4, 0.3, 0.9;
  const Mat2 R = closest_rotation(F);
  EXPECT_NEAR(R.determinant(), 1.0, 1e-14);
  EXPECT_NEAR((F - R).norm(), dist_SO2(F), 1e-14);
}

TEST(EnergyDensity, Examples) {
  EXPECT_EQ(energy_density(kUnit, Mat2::Identity()), 0.0);
  Mat2 flip;
  flip << 0.5, 0.0, 0.0, -1.0;
  EXPECT_TRUE(std::isinf(energy_density(kUnit, flip)));
  EXPECT_NEAR(energy_density(kUnit, 2.0 * Mat2::Identity()), 5.5, 1e-14);
  EXPECT_NEAR(energy_density(kUnit, 2.0 * Mat2::Identity()), oracle::energy(1, 1, 2, 2, 2.0 * Mat2::Identity()), 1e-9);
}

TEST(EnergyDensity, MatchesDefinitionForMixedExponents) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const MaterialModel m{1.3, 0.6, 1.4, 1.7};
  for (int k = 0; k < 30; ++k) {
    Mat2 F = Mat2::Identity();
    F += 1.5 * (Mat2() << u(rng), u(rng), u(rng), u(rng)).finished();
    if (F.determinant() <= 0) continue;
    const double w = energy_density(m, F);
    EXPECT_NEAR(w, oracle::energy(m.c1, m.c2, m.p, m.q, F), 1e-8 * (1.0 + w));
  }
}

TEST(Stress, ZeroAtRotations) {
  EXPECT_EQ(stress(kUnit, Mat2::Identity()).norm(), 0.0);
  for (double a : {0.3, 1.7, -2.5}) EXPECT_LE(stress(kUnit, rotation(a)).norm(), 1e-14);
}

TEST(Stress, MatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  const MaterialModel m{1.1, 0.9, 1.6, 1.3};
  int tested = 0;
  while (tested < 40) {
    Mat2 F = rotation(3.0 * u(rng)) * (Mat2::Identity() + (Mat2() << u(rng), u(rng), u(rng), u(rng)).finished());
    if (F.determinant() < 0.2 || F.determinant() > 5.0) continue;
    const Mat2 fd = oracle::fd_gradient([&](const Mat2& X) { return energy_density(m, X); }, F, 1e-6);
    const Mat2 S = stress(m, F);
    EXPECT_LE((S - fd).norm(), 1e-5 * S.norm() + 1e-9);
    ++tested;
  }
}

TEST(Stress, RejectsInvertedGradients) {
  Mat2 flip;
  flip << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(stress(kUnit, flip), ValidationError);
}

TEST(QuadraticForm, Examples) {
  EXPECT_EQ(quadratic_form(kUnit, rotation_generator()), 0.0);
  EXPECT_DOUBLE_EQ(quadratic_form(kUnit, Mat2::Identity()), 6.0);
  Mat2 e11 = Mat2::Zero();
  e11(0, 0) = 1.0;
  EXPECT_DOUBLE_EQ(quadratic_form(MaterialModel{1.0, 2.0, 2.0, 2.0}, e11), 3.0);
}

TEST(QuadraticForm, IsTheHessianAtIdentity) {
  // second central difference of W(I + tE)
  for (const MaterialModel& m : {kUnit, MaterialModel{1.0, 2.0, 1.5, 1.2}}) {
    Mat2 E;
    E << 0.3, -0.7, 0.2, 1.1;
    const double t = 1e-4;
    const double fd =
        (energy_density(m, Mat2::Identity() + t * E) + energy_density(m, Mat2::Identity() - t * E)) / (t * t);
    EXPECT_NEAR(quadratic_form(m, E), fd, 1e-3 * quadratic_form(m, E));
  }
  Mat2 e11 = Mat2::Zero();
  e11(0, 0) = 1.0;
  const MaterialModel m{1.0, 2.0, 2.0, 2.0};
  const double t = 1e-4;
  EXPECT_NEAR((energy_density(m, Mat2::Identity() + t * e11) + energy_density(m, Mat2::Identity() - t * e11)) / (t * t),
              3.0, 1e-3);
}

TEST(DetExpansion, Examples) {
  EXPECT_EQ(det_expansion(Mat2::Zero(), 0.7), 1.0);
  EXPECT_NEAR(det_expansion(Mat2::Identity(), 0.1), 1.21, 1e-15);
  EXPECT_NEAR(det_expansion(Mat2::Identity(), 0.1), (1.1 * Mat2::Identity()).determinant(), 1e-15);
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    Mat2 F;
    F << u(rng), u(rng), u(rng), u(rng);
    const Mat2 M = Mat2::Identity() + 0.3 * F;
    EXPECT_NEAR(det_expansion(F, 0.3), M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0), 1e-14);
  }
}

TEST(MaterialModel, Validation) {
  EXPECT_THROW((MaterialModel{0.0, 1.0, 2.0, 2.0}).validate(), ValidationError);
  EXPECT_THROW((MaterialModel{1.0, 1.0, 2.5, 2.0}).validate(), ValidationError);
  EXPECT_THROW((MaterialModel{1.0, 1.0, 2.0, 0.5}).validate(), ValidationError);
  EXPECT_NO_THROW(kUnit.validate());
}

}  // namespace
