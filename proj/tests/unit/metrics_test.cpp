#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evifuse/errors.hpp"
#include "evifuse/metrics.hpp"

using namespace evifuse;

TEST(Mae, Basics) {
  const std::vector<double> a = {3.0, 4.0};
  EXPECT_EQ(metrics::mae(a, a), 0.0);
  EXPECT_EQ(metrics::mae(std::vector<double>{2, 4}, std::vector<double>{1, 2}), 1.5);
  EXPECT_THROW(metrics::mae(std::vector<double>{}, std::vector<double>{}), InputError);
  EXPECT_THROW(metrics::mae(std::vector<double>{1}, std::vector<double>{1, 2}), InputError);
}

TEST(Mape, Basics) {
  const std::vector<double> a = {3.0, 4.0};
  EXPECT_EQ(metrics::mape(a, a), 0.0);
  EXPECT_NEAR(metrics::mape(std::vector<double>{11}, std::vector<double>{10}), 10.0, 1e-12);
  EXPECT_NEAR(metrics::mape(std::vector<double>{1.1, 22, 330}, std::vector<double>{1, 20, 300}), 10.0, 1e-12);
  EXPECT_THROW(metrics::mape(std::vector<double>{1}, std::vector<double>{0}), InputError);
}

TEST(Metrics, BruteForceSums) {
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> u(1.0, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> f(100), a(100);
    for (auto& v : f) v = u(rng);
    for (auto& v : a) v = u(rng);
    double abs_sum = 0.0, pct_sum = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
      abs_sum += std::abs(f[i] - a[i]);
      pct_sum += std::abs(f[i] - a[i]) / a[i];
    }
    EXPECT_NEAR(metrics::mae(f, a), abs_sum / 100.0, 1e-12);
    EXPECT_NEAR(metrics::mape(f, a), 100.0 * pct_sum / 100.0, 1e-12);
  }
}
