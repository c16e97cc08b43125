#include "gibbs/continuum.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gibbs {

ContinuumModel::ContinuumModel(int n_, double lo_, double hi_, double scale_, double mass_,
                               Boundary boundary)
    : n(n_), lo(lo_), hi(hi_), scale(scale_), mass(mass_) {
  if (n < 2 || hi <= lo) throw std::invalid_argument("ContinuumModel: bad grid");
  if (n % 2 != 0)
    throw std::invalid_argument("ContinuumModel: use an even grid so cells mirror symmetrically");
  if (scale <= 0.0) throw std::invalid_argument("ContinuumModel: scale must be > 0");
  grid = Domain(3, {n, n, n}, {-n / 2, -n / 2, -n / 2}, boundary);
  h = (hi - lo) / n;
}

std::array<double, 3> ContinuumModel::node(long long idx) const {
  const Coord c = grid.coord_of(idx);
  const double mid = 0.5 * (lo + hi);
  return {mid + (c[0] + 0.5) * h, mid + (c[1] + 0.5) * h, mid + (c[2] + 0.5) * h};
}

std::vector<double> ContinuumModel::sample_fn(const MacroFn& f) const {
  std::vector<double> v(grid.volume());
  for (long long i = 0; i < grid.volume(); ++i) {
    const auto z = node(i);
    v[i] = f(z[0], z[1], z[2]);
  }
  return v;
}

void ContinuumModel::set_potential(const MacroFn& w) { W = sample_fn(w); }

void ContinuumModel::set_potential_values(std::vector<double> w) {
  if (static_cast<long long>(w.size()) != grid.volume())
    throw std::invalid_argument("ContinuumModel: potential size mismatch");
  W = std::move(w);
}

LatticeGreen ContinuumModel::make_green() const {
  // (-scale Δ - W + mass) = (scale/h²) ((-Δ_lat) - diag(W h²/scale) + mass h²/scale)
  std::vector<double> v_lat;
  if (!W.empty()) {
    v_lat = W;
    for (double& x : v_lat) x *= h * h / scale;
  }
  return green_solve(grid, std::move(v_lat), mass * h * h / scale);
}

std::vector<double> ContinuumModel::solve(const std::vector<double>& f) const {
  LatticeGreen g = make_green();
  std::vector<double> u = g.solve(f);
  const double c = h * h / scale;
  for (double& x : u) x *= c;
  return u;
}

double ContinuumModel::quad_form_l2(const std::vector<double>& f, int power) const {
  std::vector<double> u = solve(f);
  const double w = h * h * h;
  if (power == 1) return w * std::inner_product(f.begin(), f.end(), u.begin(), 0.0);
  if (power == 2) return w * std::inner_product(u.begin(), u.end(), u.begin(), 0.0);
  throw std::invalid_argument("quad_form_l2: power must be 1 or 2");
}

double ContinuumModel::integral(const std::vector<double>& f) const {
  return h * h * h * std::accumulate(f.begin(), f.end(), 0.0);
}

double ContinuumModel::squared_kernel_form_l2(const std::vector<double>& a,
                                              bool use_symmetry) const {
  if (static_cast<long long>(a.size()) != grid.volume())
    throw std::invalid_argument("squared_kernel_form_l2: size mismatch");
  std::vector<long long> sites;
  std::vector<double> w;
  for (long long i = 0; i < grid.volume(); ++i)
    if (a[i] != 0.0) {
      sites.push_back(i);
      w.push_back(a[i]);
    }
  if (sites.empty()) return 0.0;
  LatticeGreen g = make_green();
  auto column = [&g](long long y) -> const std::vector<double>& { return g.column(y); };
  const double s = squared_kernel_form(grid, sites, w, column, use_symmetry);
  // K(z_i, z_j) = (h²/scale) [G_lat]_{ij} / h³ and the two L² integrals carry h⁶.
  const double c = h * h / scale;
  return c * c * s;
}

double avv_quadrature(const ContinuumModel& base, const std::vector<double>& V, int n_sigma) {
  if (n_sigma < 2 || n_sigma % 2 != 0)
    throw std::invalid_argument("avv_quadrature: n_sigma must be even and >= 2");
  if (static_cast<long long>(V.size()) != base.grid.volume())
    throw std::invalid_argument("avv_quadrature: V size mismatch");
  const double dsig = 1.0 / n_sigma;
  double total = 0.0;
  for (int i = 0; i <= n_sigma; ++i) {
    const double sigma = i * dsig;
    const double damp = 1.0 - sigma;
    if (damp == 0.0) continue;  // zero weight at the right endpoint
    double simpson = (i == 0 || i == n_sigma) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    ContinuumModel m = base;
    std::vector<double> w(V);
    for (double& x : w) x *= sigma;
    m.set_potential_values(std::move(w));
    total += simpson * damp * m.squared_kernel_form_l2(V);
  }
  return total * dsig / 3.0;
}

}  // namespace gibbs
