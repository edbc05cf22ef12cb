#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"

#include "dualwave/grw.hpp"
#include "dualwave/stats.hpp"

using namespace dualwave;
using namespace testing;

namespace {

double normal_pdf(double x, double mean, double var) {
  return std::exp(-(x - mean) * (x - mean) / (2 * var)) / std::sqrt(kTwoPi * var);
}

/// Sum of Gaussian bumps with random centers, widths, weights and phases.
GridWavefunction random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(-2.0, 2.0), w(0.2, 0.8), ph(0.0, kTwoPi), k(-3.0, 3.0);
  GridWavefunction psi;
  psi.lo = -8.0;
  psi.dx = 16.0 / 3200;
  psi.amp.assign(3201, 0.0);
  for (int b = 0; b < 3; ++b) {
    const double x0 = c(rng), s = w(rng), phase = ph(rng), kk = k(rng);
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double x = psi.x(i);
      psi.amp[i] += std::exp(-(x - x0) * (x - x0) / (4 * s * s)) * std::exp(Complex(0.0, phase + kk * x));
    }
  }
  psi.normalize();
  return psi;
}

GridWavefunction two_packets(double d, double s) {
  GridWavefunction a = gaussian_wavefunction(-10.0, 10.0, 4001, -d / 2, s);
  const GridWavefunction b = gaussian_wavefunction(-10.0, 10.0, 4001, d / 2, s);
  for (std::size_t i = 0; i < a.size(); ++i) a.amp[i] += b.amp[i];
  a.normalize();
  return a;
}

}  // namespace

TEST_CASE("gaussian_wavefunction moments") {
  const GridWavefunction psi = gaussian_wavefunction(-6.0, 6.0, 2401, 0.3, 0.5, 2.0);
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(psi.mean() == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(psi.variance() == doctest::Approx(0.25).epsilon(1e-8));
  // ⟨H⟩ = (k² + 1/(4s²))/2 for ħ = m = 1.
  CHECK(psi.kinetic_energy() == doctest::Approx((4.0 + 1.0) / 2).epsilon(1e-4));
}

TEST_CASE("hit density integrates to one on randomized states") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> a(0.5, 200.0);
  for (int i = 0; i < 10; ++i) {
    const GridWavefunction psi = random_state(rng);
    const double alpha = a(rng);
    const HitSampler sampler(psi, alpha);
    CHECK(std::abs(sampler.total() - 1.0) < 1e-6);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (double f : sampler.density()) CHECK(f >= 0.0);
  }
}

TEST_CASE("hit density examples") {
  SUBCASE("narrow packet gives the localization kernel") {
    const double alpha = 4.0, x0 = 0.7;
    const GridWavefunction psi = gaussian_wavefunction(-5.0, 5.0, 20001, x0, 1e-3);
    for (double z : {0.0, 0.5, 1.2, 2.0}) {
      const double kernel = std::sqrt(alpha / kPi) * std::exp(-alpha * (z - x0) * (z - x0));
      CHECK(hit_density(psi, alpha, z) == doctest::Approx(kernel).epsilon(1e-5));
    }
  }
  SUBCASE("large alpha approaches |psi|^2") {
    const GridWavefunction psi = gaussian_wavefunction(-6.0, 6.0, 4001, 0.0, 0.6);
    double prev = 1e9;
    for (double alpha : {1.0, 10.0, 100.0, 1000.0}) {
      double l1 = 0.0;
      for (std::size_t i = 0; i < psi.size(); i += 4)
        l1 += std::abs(hit_density(psi, alpha, psi.x(i)) - std::norm(psi.amp[i])) * 4 * psi.dx;
      CHECK(l1 < prev);
      prev = l1;
    }
    CHECK(prev < 1e-2);
  }
  SUBCASE("Gaussian packet gives a Gaussian with added variance") {
    const double s = 0.5, alpha = 3.0;
    const GridWavefunction psi = gaussian_wavefunction(-8.0, 8.0, 6401, 0.2, s);
    for (double z : {-1.0, 0.0, 0.2, 0.9, 2.5})
      CHECK(std::abs(hit_density(psi, alpha, z) - normal_pdf(z, 0.2, s * s + 1 / (2 * alpha))) < 1e-6);
  }
}

TEST_CASE("sample_hit_center") {
  SUBCASE("symmetric state about 0.5") {
    const GridWavefunction psi = gaussian_wavefunction(-5.0, 6.0, 2201, 0.5, 0.7);
    const HitSampler sampler(psi, 5.0);
    Stream rng(1, 0, StreamPurpose::ste), again(1, 0, StreamPurpose::ste);
    std::vector<double> z(100000);
    for (auto& v : z) v = sampler.sample(rng);
    // The one-shot form draws the same values from the same stream.
    for (int i = 0; i < 3; ++i) CHECK(sample_hit_center(psi, 5.0, again) == z[i]);
    const stats::Estimate m = stats::mean(z);
    CHECK(std::abs(m.value - 0.5) < 3 * m.std_error);
  }
  SUBCASE("variance of hit centers") {
    const double s = 0.4, alpha = 10.0;
    const GridWavefunction psi = gaussian_wavefunction(-5.0, 5.0, 4001, 0.0, s);
    const HitSampler sampler(psi, alpha);
    Stream rng(2, 0, StreamPurpose::ste);
    std::vector<double> z(100000);
    for (auto& v : z) v = sampler.sample(rng);
    const stats::Estimate v = stats::variance(z);
    CHECK(std::abs(v.value - (s * s + 1 / (2 * alpha))) < 3 * v.std_error);
  }
  SUBCASE("two separated packets split evenly") {
    const GridWavefunction psi = two_packets(6.0, 0.4);
    const HitSampler sampler(psi, 20.0);
    Stream rng(3, 0, StreamPurpose::ste);
    const int n = 100000;
    int left = 0;
    for (int i = 0; i < n; ++i) left += sampler.sample(rng) < 0.0;
    CHECK(std::abs(left - n / 2.0) < 3 * std::sqrt(n * 0.25));
  }
}

TEST_CASE("apply_hit") {
  SUBCASE("hit at the center narrows the packet") {
    const double s = 0.5, alpha = 10.0;
    const GridWavefunction psi = gaussian_wavefunction(-6.0, 6.0, 12001, 0.0, s);
    const GridWavefunction after = apply_hit(psi, alpha, 0.0);
    CHECK(after.norm() == doctest::Approx(1.0).epsilon(1e-8));
    // Amplitude width w² = 2 Var|ψ|² obeys w'⁻² = w⁻² + α.
    CHECK(std::abs(2 * after.variance() - 1 / (1 / (2 * s * s) + alpha)) < 1e-6);
    // The same identity in density terms: Var' = (s⁻² + 2α)⁻¹.
    CHECK(std::abs(after.variance() - 1 / (1 / (s * s) + 2 * alpha)) < 1e-6);
  }
  SUBCASE("vanishing alpha leaves psi unchanged") {
    std::mt19937_64 rng(5);
    const GridWavefunction psi = random_state(rng);
    const GridWavefunction after = apply_hit(psi, 1e-14, 0.4);
    double worst = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) worst = std::max(worst, std::abs(after.amp[i] - psi.amp[i]));
    CHECK(worst < 1e-8);
  }
  SUBCASE("hit on one packet suppresses the other but leaves a tail") {
    const double d = 3.0, s = 0.3, alpha = 2.0;
    const GridWavefunction psi = two_packets(d, s);
    const GridWavefunction after = apply_hit(psi, alpha, -d / 2);
    // Direct grid computation of the multiplied state.
    double left = 0.0, right = 0.0, l0 = 0.0, r0 = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double x = psi.x(i);
      const double m = std::exp(-alpha * (x + d / 2) * (x + d / 2)) * std::norm(psi.amp[i]);
      (x < 0 ? left : right) += m;
      (x < 0 ? l0 : r0) += std::norm(psi.amp[i]);
    }
    double a_left = 0.0, a_right = 0.0;
    for (std::size_t i = 0; i < after.size(); ++i) (after.x(i) < 0 ? a_left : a_right) += std::norm(after.amp[i]);
    CHECK(a_right / a_left == doctest::Approx(right / left).epsilon(1e-9));
    CHECK(a_right > 0.0);
    const double ratio = (a_right / a_left) / (r0 / l0);
    CHECK(ratio < 1e-2);
    // Suppression is set by e^{-αd²}, softened by the packet width.
    CHECK(ratio > std::exp(-alpha * d * d) * 1e-3);
  }
  SUBCASE("errors") {
    const GridWavefunction psi = gaussian_wavefunction(-5.0, 5.0, 1001, 0.0, 0.3);
    CHECK_THROWS_AS(apply_hit(psi, 100.0, 1e3), NumericError);
    CHECK_THROWS_AS(validate(HitConfig{0.0, 1.0}), ModelError);
    CHECK_THROWS_AS(validate(HitConfig{1.0, -1.0}), ModelError);
  }
}

TEST_CASE("hits keep the state normalized and commute") {
  std::mt19937_64 rng(6);
  const GridWavefunction psi = random_state(rng);
  const GridWavefunction ab = apply_hit(apply_hit(psi, 3.0, -0.4), 3.0, 0.9);
  const GridWavefunction ba = apply_hit(apply_hit(psi, 3.0, 0.9), 3.0, -0.4);
  CHECK(ab.norm() == doctest::Approx(1.0).epsilon(1e-8));
  double worst = 0.0;
  for (std::size_t i = 0; i < ab.size(); ++i) worst = std::max(worst, std::abs(ab.amp[i] - ba.amp[i]));
  CHECK(worst < 1e-10);
}

TEST_CASE("a narrowing hit raises the kinetic energy") {
  const GridWavefunction psi = gaussian_wavefunction(-6.0, 6.0, 4001, 0.0, 0.8);
  const GridWavefunction after = apply_hit(psi, 20.0, 0.1);
  CHECK(after.kinetic_energy() > psi.kinetic_energy());
}
