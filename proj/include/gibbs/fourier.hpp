#pragma once

#include <complex>
#include <random>
#include <vector>

#include "gibbs/lattice.hpp"

namespace gibbs {

// In-place 3d FFT on x-fastest flattened arrays (sides need not be equal).
struct Fft3 {
  int n0 = 0, n1 = 0, n2 = 0;  // sides along axes 0 (fastest), 1, 2
  Fft3(int n0, int n1, int n2);
  long long size() const { return static_cast<long long>(n0) * n1 * n2; }
  void forward(std::vector<std::complex<double>>& a) const;  // unnormalized
  void inverse(std::vector<std::complex<double>>& a) const;  // includes 1/(n0 n1 n2)
};

// Exact Gaussian field on a periodic box with covariance (-Δ + mass)^{-1},
// plus spectral kernel utilities. Everything is in the occupation convention.
struct PeriodicGaussian {
  Domain dom;
  double mass = 0.0;
  Fft3 fft;
  std::vector<double> lambda;  // eigenvalues mass + Σ 2(1 - cos(2π k_a/n_a))

  PeriodicGaussian(const Domain& dom, double mass);

  // One exact sample of the field (iid across calls given fresh rng draws).
  std::vector<double> sample(std::mt19937_64& rng) const;

  // Column g(., 0) of the Green function (kernel of (-Δ+mass)^{-1}).
  std::vector<double> kernel_column(int power = 1) const;

  // sum_{x,y} a_x K^{(power)}(x - y) b_y with K the Green kernel.
  double pair_form(const std::vector<double>& a, const std::vector<double>& b, int power) const;

  // Green kernel (power-th convolution power) applied to f.
  std::vector<double> apply_kernel(const std::vector<double>& f, int power) const;

  // Circular convolution of f with an arbitrary real kernel (indexed like a
  // field, entry at displacement x relative to the origin of the box).
  std::vector<double> convolve(const std::vector<double>& kernel, const std::vector<double>& f) const;

  // sum_{x,y} a_x k(x-y)² b_y for an arbitrary displacement kernel k: the
  // pointwise-squared pair form behind Wick-variance identities.
  double pair_form_squared_kernel(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::vector<double>& kernel) const;
};

}  // namespace gibbs
