#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"

#include "gibbs/fourier.hpp"
#include "gibbs/rng.hpp"
#include "gibbs/stats.hpp"

using namespace gibbs;

namespace {

long long raw_index(const Domain& dom, const Coord& d) {
  long long idx = 0, stride = 1;
  for (int a = 0; a < 3; ++a) {
    const int n = dom.side[a];
    idx += stride * (((d[a] % n) + n) % n);
    stride *= n;
  }
  return idx;
}

}  // namespace

TEST_SUITE("fourier") {

TEST_CASE("fft round trip, including unequal sides") {
  Fft3 fft(4, 6, 8);
  std::mt19937_64 rng = substream(11, 1);
  std::normal_distribution<double> gauss;
  std::vector<std::complex<double>> a(fft.size());
  for (auto& z : a) z = {gauss(rng), gauss(rng)};
  std::vector<std::complex<double>> b = a;
  fft.forward(b);
  fft.inverse(b);
  for (long long i = 0; i < fft.size(); ++i) {
    CHECK(b[i].real() == doctest::Approx(a[i].real()).epsilon(1e-12));
    CHECK(b[i].imag() == doctest::Approx(a[i].imag()).epsilon(1e-12));
  }
}

TEST_CASE("forward transform of a delta is flat") {
  Fft3 fft(4, 4, 4);
  std::vector<std::complex<double>> a(64, 0.0);
  a[0] = 1.0;
  fft.forward(a);
  for (const auto& z : a) {
    CHECK(z.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(z.imag()) < 1e-12);
  }
}

TEST_CASE("kernel column solves the massive lattice equation") {
  Domain dom = Domain::centered(3, 6, Boundary::periodic);
  const double mass = 0.5;
  PeriodicGaussian pg(dom, mass);
  const std::vector<double> k = pg.kernel_column(1);
  // Apply (-Delta + mass) to the kernel in displacement space: delta expected.
  for (long long i = 0; i < dom.volume(); ++i) {
    Coord d(3);
    long long rem = i;
    for (int a = 0; a < 3; ++a) {
      d[a] = rem % dom.side[a];
      rem /= dom.side[a];
    }
    double lap = (6.0 + mass) * k[i];
    for (int a = 0; a < 3; ++a) {
      for (int dir : {-1, +1}) {
        Coord nb = d;
        nb[a] = (nb[a] + dir + dom.side[a]) % dom.side[a];
        lap -= k[raw_index(dom, nb)];
      }
    }
    CHECK(lap == doctest::Approx(i == 0 ? 1.0 : 0.0).epsilon(1e-10));
  }
}

TEST_CASE("samples have the spectral covariance") {
  Domain dom = Domain::centered(3, 8, Boundary::periodic);
  const double mass = 1.0;
  PeriodicGaussian pg(dom, mass);
  const std::vector<double> k = pg.kernel_column(1);
  std::mt19937_64 rng = substream(11, 2);
  const int n = 20000;
  const long long x0 = 0;
  const long long x1 = raw_index(dom, {1, 0, 0});
  std::vector<double> v0(n), v01(n);
  for (int i = 0; i < n; ++i) {
    const std::vector<double> phi = pg.sample(rng);
    v0[i] = phi[x0] * phi[x0];
    v01[i] = phi[x0] * phi[x1];
  }
  Estimate e0 = batch_means(v0), e01 = batch_means(v01);
  CHECK(std::abs(e0.mean - k[0]) < 3.0 * e0.std_error);
  CHECK(std::abs(e01.mean - k[x1]) < 3.0 * e01.std_error);
}

TEST_CASE("pair form against a brute force double sum") {
  Domain dom = Domain::centered(3, 4, Boundary::periodic);
  const double mass = 0.8;
  PeriodicGaussian pg(dom, mass);
  std::mt19937_64 rng = substream(11, 3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> a(dom.volume()), b(dom.volume());
  for (long long i = 0; i < dom.volume(); ++i) {
    a[i] = unif(rng);
    b[i] = unif(rng);
  }
  for (int power : {1, 2}) {
    const std::vector<double> k = pg.kernel_column(power);
    double brute = 0.0;
    for (long long x = 0; x < dom.volume(); ++x)
      for (long long y = 0; y < dom.volume(); ++y) {
        Coord cx = dom.coord_of(x), cy = dom.coord_of(y);
        Coord d(3);
        for (int ax = 0; ax < 3; ++ax) d[ax] = cx[ax] - cy[ax];
        brute += a[x] * k[raw_index(dom, d)] * b[y];
      }
    CHECK(pg.pair_form(a, b, power) == doctest::Approx(brute).epsilon(1e-10));
  }
}

TEST_CASE("apply_kernel matches convolve with the kernel column") {
  Domain dom = Domain::centered(3, 6, Boundary::periodic);
  PeriodicGaussian pg(dom, 0.3);
  std::mt19937_64 rng = substream(11, 4);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> f(dom.volume());
  for (double& v : f) v = unif(rng);
  const std::vector<double> viaA = pg.apply_kernel(f, 1);
  const std::vector<double> viaC = pg.convolve(pg.kernel_column(1), f);
  for (long long i = 0; i < dom.volume(); ++i)
    CHECK(viaA[i] == doctest::Approx(viaC[i]).epsilon(1e-10));
}

TEST_CASE("convolution with a shifted delta relocates the field") {
  Domain dom = Domain::centered(3, 4, Boundary::periodic);
  PeriodicGaussian pg(dom, 1.0);
  std::vector<double> kernel(dom.volume(), 0.0);
  kernel[raw_index(dom, {1, 0, 0})] = 1.0;  // shift by +e1 with wraparound
  std::vector<double> f(dom.volume(), 0.0);
  for (long long i = 0; i < dom.volume(); ++i) f[i] = (double)i;
  const std::vector<double> g = pg.convolve(kernel, f);
  for (long long i = 0; i < dom.volume(); ++i) {
    Coord c = dom.coord_of(i);
    Coord src = c;
    src[0] -= 1;
    const long long j = dom.index_of(dom.normalize(src));
    CHECK(g[i] == doctest::Approx(f[j]).epsilon(1e-10));
  }
}

TEST_CASE("squared kernel pair form matches the direct sum") {
  Domain dom = Domain::centered(3, 4, Boundary::periodic);
  PeriodicGaussian pg(dom, 0.6);
  std::mt19937_64 rng = substream(11, 5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> a(dom.volume()), b(dom.volume());
  for (long long i = 0; i < dom.volume(); ++i) {
    a[i] = unif(rng);
    b[i] = unif(rng);
  }
  const std::vector<double> k = pg.kernel_column(1);
  double brute = 0.0;
  for (long long x = 0; x < dom.volume(); ++x)
    for (long long y = 0; y < dom.volume(); ++y) {
      Coord cx = dom.coord_of(x), cy = dom.coord_of(y);
      Coord d(3);
      for (int ax = 0; ax < 3; ++ax) d[ax] = cx[ax] - cy[ax];
      const double kv = k[raw_index(dom, d)];
      brute += a[x] * kv * kv * b[y];
    }
  CHECK(pg.pair_form_squared_kernel(a, b, k) == doctest::Approx(brute).epsilon(1e-10));
}

}  // TEST_SUITE
