#include "gibbs/fourier.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace gibbs {

namespace {

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

using CVec = std::vector<std::complex<double>>;

void transform_axis(CVec& a, int n_axis, long long stride, long long count_outer,
                    long long block, bool forward) {
  // Iterates over all 1d lines along one axis: line l starts at
  // outer*block + inner and steps by stride, inner in [0, stride).
  CVec line(n_axis), out(n_axis);
  for (long long outer = 0; outer < count_outer; ++outer) {
    for (long long inner = 0; inner < stride; ++inner) {
      const long long base = outer * block + inner;
      for (int i = 0; i < n_axis; ++i) line[i] = a[base + i * stride];
      if (forward)
        fft_engine().fwd(out, line);
      else
        fft_engine().inv(out, line);
      for (int i = 0; i < n_axis; ++i) a[base + i * stride] = out[i];
    }
  }
}

}  // namespace

Fft3::Fft3(int n0_, int n1_, int n2_) : n0(n0_), n1(n1_), n2(n2_) {
  if (n0 < 1 || n1 < 1 || n2 < 1) throw std::invalid_argument("Fft3: sides must be positive");
}

void Fft3::forward(CVec& a) const {
  if (static_cast<long long>(a.size()) != size()) throw std::invalid_argument("Fft3: size mismatch");
  transform_axis(a, n0, 1, static_cast<long long>(n1) * n2, n0, true);
  transform_axis(a, n1, n0, n2, static_cast<long long>(n0) * n1, true);
  transform_axis(a, n2, static_cast<long long>(n0) * n1, 1, size(), true);
}

void Fft3::inverse(CVec& a) const {
  if (static_cast<long long>(a.size()) != size()) throw std::invalid_argument("Fft3: size mismatch");
  transform_axis(a, n0, 1, static_cast<long long>(n1) * n2, n0, false);
  transform_axis(a, n1, n0, n2, static_cast<long long>(n0) * n1, false);
  transform_axis(a, n2, static_cast<long long>(n0) * n1, 1, size(), false);
}

PeriodicGaussian::PeriodicGaussian(const Domain& d, double m)
    : dom(d), mass(m), fft(d.side.at(0), d.side.at(1), d.side.at(2)) {
  if (dom.dim != 3) throw std::invalid_argument("PeriodicGaussian: 3d only");
  if (dom.boundary != Boundary::periodic)
    throw std::invalid_argument("PeriodicGaussian: needs a periodic domain");
  if (mass <= 0.0) throw std::invalid_argument("PeriodicGaussian: needs mass > 0");
  const long long n = dom.volume();
  lambda.resize(n);
  const double two_pi = 2.0 * M_PI;
  long long idx = 0;
  for (int k2 = 0; k2 < dom.side[2]; ++k2) {
    const double l2 = 2.0 * (1.0 - std::cos(two_pi * k2 / dom.side[2]));
    for (int k1 = 0; k1 < dom.side[1]; ++k1) {
      const double l1 = 2.0 * (1.0 - std::cos(two_pi * k1 / dom.side[1]));
      for (int k0 = 0; k0 < dom.side[0]; ++k0) {
        const double l0 = 2.0 * (1.0 - std::cos(two_pi * k0 / dom.side[0]));
        lambda[idx++] = mass + l0 + l1 + l2;
      }
    }
  }
}

std::vector<double> PeriodicGaussian::sample(std::mt19937_64& rng) const {
  const long long n = dom.volume();
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVec a(n);
  for (long long i = 0; i < n; ++i) a[i] = gauss(rng);
  fft.forward(a);
  for (long long i = 0; i < n; ++i) a[i] /= std::sqrt(lambda[i]);
  fft.inverse(a);
  std::vector<double> phi(n);
  for (long long i = 0; i < n; ++i) phi[i] = a[i].real();
  return phi;
}

std::vector<double> PeriodicGaussian::kernel_column(int power) const {
  const long long n = dom.volume();
  CVec a(n);
  for (long long i = 0; i < n; ++i) a[i] = std::pow(lambda[i], -power);
  fft.inverse(a);
  std::vector<double> col(n);
  for (long long i = 0; i < n; ++i) col[i] = a[i].real();
  return col;
}

double PeriodicGaussian::pair_form(const std::vector<double>& a, const std::vector<double>& b,
                                   int power) const {
  const long long n = dom.volume();
  if (static_cast<long long>(a.size()) != n || static_cast<long long>(b.size()) != n)
    throw std::invalid_argument("pair_form: size mismatch");
  CVec fa(n), fb(n);
  for (long long i = 0; i < n; ++i) {
    fa[i] = a[i];
    fb[i] = b[i];
  }
  fft.forward(fa);
  fft.forward(fb);
  double s = 0.0;
  for (long long i = 0; i < n; ++i)
    s += (std::conj(fa[i]) * fb[i]).real() / std::pow(lambda[i], power);
  return s / n;
}

std::vector<double> PeriodicGaussian::apply_kernel(const std::vector<double>& f, int power) const {
  const long long n = dom.volume();
  CVec a(n);
  for (long long i = 0; i < n; ++i) a[i] = f[i];
  fft.forward(a);
  for (long long i = 0; i < n; ++i) a[i] /= std::pow(lambda[i], power);
  fft.inverse(a);
  std::vector<double> out(n);
  for (long long i = 0; i < n; ++i) out[i] = a[i].real();
  return out;
}

std::vector<double> PeriodicGaussian::convolve(const std::vector<double>& kernel,
                                               const std::vector<double>& f) const {
  const long long n = dom.volume();
  if (static_cast<long long>(kernel.size()) != n || static_cast<long long>(f.size()) != n)
    throw std::invalid_argument("convolve: size mismatch");
  CVec fk(n), ff(n);
  for (long long i = 0; i < n; ++i) {
    fk[i] = kernel[i];
    ff[i] = f[i];
  }
  fft.forward(fk);
  fft.forward(ff);
  for (long long i = 0; i < n; ++i) fk[i] *= ff[i];
  fft.inverse(fk);
  std::vector<double> out(n);
  for (long long i = 0; i < n; ++i) out[i] = fk[i].real();
  return out;
}

double PeriodicGaussian::pair_form_squared_kernel(const std::vector<double>& a,
                                                  const std::vector<double>& b,
                                                  const std::vector<double>& kernel) const {
  const long long n = dom.volume();
  if (static_cast<long long>(a.size()) != n || static_cast<long long>(b.size()) != n ||
      static_cast<long long>(kernel.size()) != n)
    throw std::invalid_argument("pair_form_squared_kernel: size mismatch");
  std::vector<double> k2(n);
  for (long long i = 0; i < n; ++i) k2[i] = kernel[i] * kernel[i];
  std::vector<double> conv = convolve(k2, b);
  double acc = 0.0;
  for (long long i = 0; i < n; ++i) acc += a[i] * conv[i];
  return acc;
}

}  // namespace gibbs
