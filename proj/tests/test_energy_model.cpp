#include <gtest/gtest.h>

#include <vector>

#include "dfr/energy_model.hpp"

using namespace dfr::model;

TEST(Model, PNeigh) {
  EXPECT_EQ(p_neigh(0, 1), 0);
  EXPECT_EQ(p_neigh(1, 1), 0);
  EXPECT_EQ(p_neigh(3, 1), 4);
  EXPECT_EQ(p_neigh(3, 2), 16);
  EXPECT_THROW(p_neigh(-1, 1), std::invalid_argument);
  EXPECT_THROW(p_neigh(1, 3), std::invalid_argument);
  for (int i = 1; i < 50; ++i) EXPECT_GE(p_neigh(i, 2), p_neigh(i - 1, 2));
}

TEST(Model, PActive) {
  EXPECT_EQ(p_active(1, 1), 0);
  EXPECT_DOUBLE_EQ(p_active(6, 1), 5.0);
  EXPECT_NEAR(p_active(6, 2), 36.67, 0.01);
  for (int c = 2; c < 40; ++c) EXPECT_GE(p_active(c, 1), p_active(c - 1, 1));
}

TEST(Model, PIdle) {
  EXPECT_DOUBLE_EQ(p_idle(1000, 6, 1), 995.0);
  // n = 8, c_it = 3, 2D: p_active = (0 + 4 + 16) / 3.
  EXPECT_DOUBLE_EQ(p_idle(8, 3, 2), 8.0 - 20.0 / 3.0);
  EXPECT_EQ(p_idle(5, 10, 2), 0.0);
  EXPECT_EQ(savings_rate(5, 100, p_idle(5, 10, 2), 20), 0.0);
  for (double n = 2; n < 200; n += 7) EXPECT_GE(p_idle(n, 6, 1), p_idle(n - 1, 6, 1));
}

TEST(Model, CE) {
  for (int c = 1; c < 20; ++c) EXPECT_DOUBLE_EQ(c_e(10, 4, c), 20.0 * c);
  EXPECT_EQ(c_e(0, 4, 7), 0.0);
  EXPECT_DOUBLE_EQ(c_e(15, 4, 6), 180.0);
}

TEST(Model, EJacobi) {
  const double mu = 50 * kSecondsPerYear;
  EXPECT_DOUBLE_EQ(mu, 1.5768e9);
  EXPECT_NEAR(e_jacobi(1e4, mu, 10), 12.68, 0.01);
  EXPECT_NEAR(e_jacobi(1e5, mu, 10), 1268.4, 0.1);
  EXPECT_DOUBLE_EQ(e_jacobi(1, 20, 1), 1.0);
  EXPECT_THROW(e_jacobi(0, 1, 1), std::invalid_argument);
}

TEST(Model, SavingsRateIdentityAndApproximation) {
  const double mu = 50 * kSecondsPerYear;
  for (double n : {1e3, 1e4, 1e5}) {
    for (int c = 1; c <= 10; ++c) {
      EXPECT_DOUBLE_EQ(e_jacobi(n, mu, c), savings_rate(n, mu, n, c_e(10, 4, c)));
      const double exact = savings_rate(n, mu, p_idle(n, c, 1), c_e(10, 4, c));
      EXPECT_LT(std::abs(exact - e_jacobi(n, mu, c)) / e_jacobi(n, mu, c), 0.01);
    }
  }
  const double a = savings_rate(1e4, mu, 1e4, 200), b = savings_rate(2e4, mu, 2e4, 200);
  EXPECT_DOUBLE_EQ(b / a, 4.0);
}

TEST(Model, QuadraticGrowth) {
  // Second differences of e_jacobi on an evenly spaced n grid are constant and
  // positive; first differences are not constant.
  const double mu = kSecondsPerYear;
  std::vector<double> v;
  for (double n = 1e4; n <= 1e5; n += 1e4) v.push_back(e_jacobi(n, mu, 6));
  for (std::size_t k = 2; k < v.size(); ++k) {
    const double second = v[k] - 2 * v[k - 1] + v[k - 2];
    EXPECT_GT(second, 0);
    EXPECT_NEAR(second, v[2] - 2 * v[1] + v[0], 1e-9 * v.back());
  }
  EXPECT_GT(v[2] - v[1], 1.5 * (v[1] - v[0]) - 1e-9);
}

TEST(Model, ProjectSavings) {
  EXPECT_EQ(project_savings(0, 500), 0.0);
  EXPECT_DOUBLE_EQ(project_savings(8e4, 500), 4e7);
  EXPECT_DOUBLE_EQ(project_savings(1000, 500), 5e5);
  EXPECT_THROW(project_savings(1, -1), std::invalid_argument);
}

TEST(Model, ParamsValidate) {
  ModelParams p;
  EXPECT_NO_THROW(p.validate());
  p.dim = 3;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ModelParams{};
  p.mu = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
