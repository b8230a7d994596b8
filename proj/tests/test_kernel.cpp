#include "m2ch/kernel.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

using namespace m2ch;

namespace {

KernelSums<double> direct(const Eigen::ArrayXd& y, const Eigen::ArrayXd& w, double dxi) {
  const auto n = y.size();
  KernelSums<double> out{Eigen::ArrayXd::Zero(n), Eigen::ArrayXd::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double e = std::exp(-std::abs(y[i] - y[j])) * w[j] * dxi;
      out.sym[i] += e;
      out.asym[i] += (i > j ? 1.0 : i < j ? -1.0 : 0.0) * e;
    }
  return out;
}

}  // namespace

TEST_CASE("sweeps match direct summation on random monotone input") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> inc(0.0, 0.3), wd(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index n = 256;
    Eigen::ArrayXd y(n), w(n);
    y[0] = -20.0;
    for (Eigen::Index i = 1; i < n; ++i) y[i] = y[i - 1] + (k % 3 == 0 && i % 7 == 0 ? 0.0 : inc(rng));
    for (Eigen::Index i = 0; i < n; ++i) w[i] = wd(rng);
    const auto fast = kernel_convolve(y, w, 0.05);
    const auto ref = direct(y, w, 0.05);
    const double scale = (w.abs() * 0.05).sum();
    CHECK(((fast.sym - ref.sym).abs() / scale).maxCoeff() <= 1e-13);
    CHECK(((fast.asym - ref.asym).abs() / scale).maxCoeff() <= 1e-13);
  }
}

TEST_CASE("monotonicity tolerance") {
  Eigen::ArrayXd y(3), w = Eigen::ArrayXd::Ones(3);
  y << 0.0, 1.0, 1.0 - 1e-12;
  const auto k = kernel_convolve(y, w, 1.0);
  CHECK(k.sym[1] == doctest::Approx(k.sym[2]));
  y << 0.0, 1.0, 0.9;
  CHECK_THROWS_AS(kernel_convolve(y, w, 1.0), std::invalid_argument);
  y << 0.0, NAN, 1.0;
  CHECK_THROWS_AS(kernel_convolve(y, w, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(kernel_convolve(Eigen::ArrayXd::Zero(3), Eigen::ArrayXd::Zero(2), 1.0), std::invalid_argument);
  const auto empty = kernel_convolve(Eigen::ArrayXd(), Eigen::ArrayXd(), 1.0);
  CHECK(empty.sym.size() == 0);
}

TEST_CASE("single node and wide gaps") {
  Eigen::ArrayXd y(1), w(1);
  y << 3.0;
  w << 2.0;
  const auto k = kernel_convolve(y, w, 0.5);
  CHECK(k.sym[0] == 1.0);
  CHECK(k.asym[0] == 0.0);
  Eigen::ArrayXd y2(2), w2(2);
  y2 << 0.0, 800.0;
  w2 << 1.0, 1.0;
  const auto far = kernel_convolve(y2, w2, 1.0);
  CHECK(far.sym[0] == 1.0);
  CHECK(far.sym[1] == 1.0);
  CHECK(far.asym[1] == 0.0);
}

TEST_CASE("float scalar") {
  Eigen::ArrayXf y = Eigen::ArrayXf::LinSpaced(64, -3.0f, 3.0f), w = Eigen::ArrayXf::Ones(64);
  const auto f = kernel_convolve(y, w, 0.1f);
  const auto d = kernel_convolve(y.cast<double>().eval(), w.cast<double>().eval(), 0.1);
  CHECK((f.sym.cast<double>() - d.sym).abs().maxCoeff() < 1e-5);
}

TEST_CASE("linear cost") {
  const Eigen::Index n = 1 << 20;
  const Eigen::ArrayXd y = Eigen::ArrayXd::LinSpaced(n, -50.0, 50.0), w = (y * 0.3).sin();
  const auto t0 = std::chrono::steady_clock::now();
  const auto k = kernel_convolve(y, w, 100.0 / (n - 1));
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  CHECK(k.sym.allFinite());
  MESSAGE("N = 2^20 convolution: " << ms << " ms");
  CHECK(ms < 1000.0);
}
