#include "gibbs/mollifier.hpp"

#include <cmath>
#include <stdexcept>

namespace gibbs {

namespace {

double bump_raw(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

double bump_integral(int M) {
  // Midpoint rule over [-1,1]³; the bump is flat to all orders at the sphere,
  // so the composite midpoint rule converges quickly.
  const double h = 2.0 / M;
  double s = 0.0;
  for (int i = 0; i < M; ++i) {
    const double x = -1.0 + (i + 0.5) * h;
    for (int j = 0; j < M; ++j) {
      const double y = -1.0 + (j + 0.5) * h;
      for (int k = 0; k < M; ++k) {
        const double z = -1.0 + (k + 0.5) * h;
        s += bump_raw(x * x + y * y + z * z);
      }
    }
  }
  return s * h * h * h;
}

}  // namespace

double bump_norm_constant() {
  static const double c = [] {
    double prev = bump_integral(32);
    for (int M = 64; M <= 512; M *= 2) {
      const double curr = bump_integral(M);
      if (std::abs(curr - prev) < 1e-10 * curr) return 1.0 / curr;
      prev = curr;
    }
    return 1.0 / prev;
  }();
  return c;
}

double mollifier_density(const std::array<double, 3>& z, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("mollifier_density: eps must be > 0");
  const double r2 =
      (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) / (eps * eps);
  return bump_norm_constant() * bump_raw(r2) / (eps * eps * eps);
}

MollifierWeights mollifier_weights(const Domain& dom, int N, double eps,
                                   const std::array<double, 3>& z) {
  if (dom.dim != 3) throw std::invalid_argument("mollifier_weights: 3d only");
  if (N < 1) throw std::invalid_argument("mollifier_weights: N must be >= 1");
  MollifierWeights out;
  out.N = N;
  const double n3 = static_cast<double>(N) * N * N;
  if (eps == 0.0) {
    Coord cell = cell_of({z[0], z[1], z[2]}, N);
    if (dom.boundary == Boundary::periodic) cell = dom.normalize(cell);
    if (!dom.contains(cell))
      throw std::invalid_argument("mollifier_weights: query point outside the domain");
    out.sites.push_back(dom.index_of(cell));
    out.weights.push_back(n3);
    out.total = 1.0;
    return out;
  }
  if (N < 1.0 / eps - 1e-12)
    throw std::invalid_argument("mollifier_weights: resolution too coarse, need N >= 1/eps");
  // Cells intersecting the ball of radius eps around z.
  Coord lo(3), hi(3);
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<int>(std::floor((z[a] - eps) * N));
    hi[a] = static_cast<int>(std::floor((z[a] + eps) * N));
  }
  double total = 0.0;
  Coord c(3);
  for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
    for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
      for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2]) {
        // ∫_cell ρ^ε(z - w) dw by two-level midpoint with Richardson.
        auto quad = [&](int M) {
          const double step = 1.0 / (N * M);
          double s = 0.0;
          for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
              for (int k = 0; k < M; ++k) {
                const std::array<double, 3> d = {
                    z[0] - (c[0] / static_cast<double>(N) + (i + 0.5) * step),
                    z[1] - (c[1] / static_cast<double>(N) + (j + 0.5) * step),
                    z[2] - (c[2] / static_cast<double>(N) + (k + 0.5) * step)};
                s += mollifier_density(d, eps);
              }
          return s / (static_cast<double>(M) * M * M) / n3;
        };
        const double i2 = quad(2), i4 = quad(4);
        const double integral = (4.0 * i4 - i2) / 3.0;
        if (integral <= 0.0) continue;
        Coord cc = c;
        if (dom.boundary == Boundary::periodic) cc = dom.normalize(cc);
        if (!dom.contains(cc)) continue;  // truncated near Dirichlet edges
        out.sites.push_back(dom.index_of(cc));
        out.weights.push_back(integral * n3);
        total += integral;
      }
  out.total = total;
  return out;
}

double apply_weights(const MollifierWeights& w, const std::vector<double>& phi) {
  double s = 0.0;
  for (size_t i = 0; i < w.sites.size(); ++i) s += w.weights[i] * phi[w.sites[i]];
  const double n3 = static_cast<double>(w.N) * w.N * w.N;
  return s / n3;
}

std::vector<double> weights_as_field(const Domain& dom, const MollifierWeights& w) {
  std::vector<double> f(dom.volume(), 0.0);
  for (size_t i = 0; i < w.sites.size(); ++i) f[w.sites[i]] += w.weights[i];
  return f;
}

}  // namespace gibbs
