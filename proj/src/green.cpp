#include "gibbs/green.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Dense>

#include "gibbs/rng.hpp"

namespace gibbs {

namespace {

// d = 3 stencil application, branch-light inner loop.
void apply3(const Domain& dom, const std::vector<double>* V, double mass,
            const std::vector<uint8_t>* excluded, const std::vector<double>& f,
            std::vector<double>& out) {
  const int nx = dom.side[0], ny = dom.side[1], nz = dom.side[2];
  const bool per = dom.boundary == Boundary::periodic;
  const long long sy = nx;
  const long long sz = static_cast<long long>(nx) * ny;
  const double* fp = f.data();
  const double* vp = V && !V->empty() ? V->data() : nullptr;
  const uint8_t* ex = excluded ? excluded->data() : nullptr;
  for (int z = 0; z < nz; ++z) {
    const long long zp = (z + 1 < nz) ? sz : (per ? sz - static_cast<long long>(nz) * sz : 0);
    const long long zm = (z > 0) ? -sz : (per ? static_cast<long long>(nz - 1) * sz : 0);
    for (int y = 0; y < ny; ++y) {
      const long long yp = (y + 1 < ny) ? sy : (per ? sy - static_cast<long long>(ny) * sy : 0);
      const long long ym = (y > 0) ? -sy : (per ? static_cast<long long>(ny - 1) * sy : 0);
      const long long base = y * sy + z * sz;
      for (int x = 0; x < nx; ++x) {
        const long long i = base + x;
        if (ex && ex[i]) {
          out[i] = fp[i];
          continue;
        }
        double s = 0.0;
        if (x + 1 < nx) {
          if (!ex || !ex[i + 1]) s += fp[i + 1];
        } else if (per) {
          if (!ex || !ex[i + 1 - nx]) s += fp[i + 1 - nx];
        }
        if (x > 0) {
          if (!ex || !ex[i - 1]) s += fp[i - 1];
        } else if (per) {
          if (!ex || !ex[i - 1 + nx]) s += fp[i - 1 + nx];
        }
        if (yp != 0 && (!ex || !ex[i + yp])) s += fp[i + yp];
        if (ym != 0 && (!ex || !ex[i + ym])) s += fp[i + ym];
        if (zp != 0 && (!ex || !ex[i + zp])) s += fp[i + zp];
        if (zm != 0 && (!ex || !ex[i + zm])) s += fp[i + zm];
        const double diag = 6.0 + mass - (vp ? vp[i] : 0.0);
        out[i] = diag * fp[i] - s;
      }
    }
  }
}

void apply_generic(const Domain& dom, const std::vector<double>* V, double mass,
                   const std::vector<uint8_t>* excluded, const std::vector<double>& f,
                   std::vector<double>& out) {
  const long long n = dom.volume();
  const double two_d = 2.0 * dom.dim;
  for (long long i = 0; i < n; ++i) {
    if (excluded && (*excluded)[i]) {
      out[i] = f[i];
      continue;
    }
    double s = 0.0;
    for (const NeighborRef& nb : neighbors(dom, i)) {
      if (nb.outside) continue;
      if (excluded && (*excluded)[nb.site]) continue;
      s += f[nb.site];
    }
    const double v = (V && !V->empty()) ? (*V)[i] : 0.0;
    out[i] = (two_d + mass - v) * f[i] - s;
  }
}

}  // namespace

void LatticeOperator::apply(const std::vector<double>& f, std::vector<double>& out) const {
  if (static_cast<long long>(f.size()) != dom->volume())
    throw std::invalid_argument("LatticeOperator::apply: size mismatch");
  out.resize(f.size());
  if (dom->dim == 3)
    apply3(*dom, V, mass, excluded, f, out);
  else
    apply_generic(*dom, V, mass, excluded, f, out);
}

double LatticeOperator::diag(long long i) const {
  if (excluded && (*excluded)[i]) return 1.0;
  const double v = (V && !V->empty()) ? (*V)[i] : 0.0;
  return 2.0 * dom->dim + mass - v;
}

CgReport cg_solve(const LatticeOperator& A, const std::vector<double>& b,
                  std::vector<double>& x, double tol, int max_iter) {
  const size_t n = b.size();
  if (x.size() != n) x.assign(n, 0.0);
  std::vector<double> r(n), z(n), p(n), Ap(n);
  std::vector<double> invdiag(n);
  for (size_t i = 0; i < n; ++i) {
    const double d = A.diag(static_cast<long long>(i));
    if (d <= 0.0) throw std::runtime_error("cg_solve: non-positive diagonal, operator not usable");
    invdiag[i] = 1.0 / d;
  }
  const double bnorm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    return {0, 0.0, true};
  }
  A.apply(x, Ap);
  for (size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  for (size_t i = 0; i < n; ++i) z[i] = invdiag[i] * r[i];
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
  CgReport rep;
  for (int it = 0; it < max_iter; ++it) {
    A.apply(p, Ap);
    const double pAp = std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
    if (pAp <= 0.0) throw std::runtime_error("cg_solve: operator not positive definite");
    const double alpha = rz / pAp;
    for (size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (size_t i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
    const double rnorm = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
    rep.iterations = it + 1;
    rep.rel_residual = rnorm / bnorm;
    if (rep.rel_residual <= tol) {
      rep.converged = true;
      return rep;
    }
    for (size_t i = 0; i < n; ++i) z[i] = invdiag[i] * r[i];
    const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw std::runtime_error("cg_solve: no convergence after " + std::to_string(max_iter) +
                           " iterations, rel residual " + std::to_string(rep.rel_residual));
}

const std::vector<double>& LatticeGreen::column(long long y) const {
  auto it = columns_.find(y);
  if (it != columns_.end()) return it->second;
  std::vector<double> rhs(dom.volume(), 0.0);
  rhs[y] = 1.0;
  LatticeOperator A{&dom, V.empty() ? nullptr : &V, mass, nullptr};
  std::vector<double> col;
  CgReport rep = cg_solve(A, rhs, col, tol);
  worst_residual = std::max(worst_residual, rep.rel_residual);
  return columns_.emplace(y, std::move(col)).first->second;
}

double LatticeGreen::at(long long x, long long y) const { return factor() * column(y)[x]; }

std::vector<double> LatticeGreen::solve(const std::vector<double>& rhs) const {
  LatticeOperator A{&dom, V.empty() ? nullptr : &V, mass, nullptr};
  std::vector<double> x;
  CgReport rep = cg_solve(A, rhs, x, tol);
  worst_residual = std::max(worst_residual, rep.rel_residual);
  return x;
}

double LatticeGreen::quad_form(const std::vector<double>& f, int power) const {
  if (power != 1 && power != 2) throw std::invalid_argument("quad_form: power must be 1 or 2");
  std::vector<double> u = solve(f);
  double s = 0.0;
  if (power == 1)
    s = std::inner_product(f.begin(), f.end(), u.begin(), 0.0);
  else
    s = std::inner_product(u.begin(), u.end(), u.begin(), 0.0);
  const double c = factor();
  return power == 1 ? c * s : c * c * s;
}

LatticeGreen green_solve(const Domain& dom, std::vector<double> V, double mass,
                         GreenConvention conv, double tol) {
  if (dom.boundary == Boundary::periodic && mass <= 0.0)
    throw std::invalid_argument("green_solve: periodic domain needs mass > 0");
  if (!V.empty()) {
    if (static_cast<long long>(V.size()) != dom.volume())
      throw std::invalid_argument("green_solve: V size mismatch");
    // Admissibility: sup (-Δ + mass)^{-1} V_+ must stay below 1, otherwise the
    // tilted operator can lose positivity.
    std::vector<double> vplus(V.size(), 0.0);
    bool any = false;
    for (size_t i = 0; i < V.size(); ++i)
      if (V[i] > 0.0) {
        vplus[i] = V[i];
        any = true;
      }
    if (any) {
      LatticeOperator A0{&dom, nullptr, mass, nullptr};
      std::vector<double> u;
      cg_solve(A0, vplus, u, 1e-8);
      const double sup = *std::max_element(u.begin(), u.end());
      if (sup >= 1.0 - 1e-9)
        throw std::invalid_argument("green_solve: tilt not admissible, sup (-Δ)^{-1} V+ = " +
                                    std::to_string(sup));
    }
  }
  LatticeGreen g;
  g.dom = dom;
  g.V = std::move(V);
  g.mass = mass;
  g.convention = conv;
  g.tol = tol;
  return g;
}

// ---------------------------------------------------------------------------
// Heat kernels.

namespace {

// out = (L_clock + diag(V)) f  with L_clock = Δ/(2d) or Δ.
struct TiltedGenerator {
  const Domain* dom;
  std::vector<double> v_scaled;  // 2d * V for unit_rate, V for edge_rate
  double scale;                  // 1/(2d) or 1

  void apply(const std::vector<double>& f, std::vector<double>& out) const {
    LatticeOperator A{dom, v_scaled.empty() ? nullptr : &v_scaled, 0.0, nullptr};
    A.apply(f, out);
    for (double& x : out) x = -scale * x;
  }
};

TiltedGenerator make_generator(const Domain& dom, const std::vector<double>& V, HeatClock clock) {
  TiltedGenerator g;
  g.dom = &dom;
  g.scale = clock == HeatClock::unit_rate ? 1.0 / (2.0 * dom.dim) : 1.0;
  if (!V.empty()) {
    g.v_scaled = V;
    const double f = clock == HeatClock::unit_rate ? 2.0 * dom.dim : 1.0;
    for (double& x : g.v_scaled) x *= f;
  }
  return g;
}

}  // namespace

std::vector<double> heat_kernel_column(const Domain& dom, const std::vector<double>& V,
                                       long long y, double t, HeatClock clock, double tol) {
  const long long n = dom.volume();
  if (!V.empty() && static_cast<long long>(V.size()) != n)
    throw std::invalid_argument("heat_kernel_column: V size mismatch");
  if (t < 0.0) throw std::invalid_argument("heat_kernel_column: t must be >= 0");
  TiltedGenerator A = make_generator(dom, V, clock);
  if (t == 0.0) {
    std::vector<double> col(n, 0.0);
    col[y] = 1.0;
    return col;
  }
  const int m_max = 180;
  if (n * static_cast<long long>(m_max) > 400000000LL)
    throw std::invalid_argument("heat_kernel_column: domain too large for the Lanczos basis");
  std::vector<std::vector<double>> basis;
  basis.reserve(64);
  std::vector<double> alpha, beta;
  std::vector<double> v(n, 0.0), w(n);
  v[y] = 1.0;
  basis.push_back(v);
  std::vector<double> coeff;  // e^{tT} e_1 in the Lanczos basis
  int m = 0;
  bool done = false;
  while (!done && m < m_max) {
    A.apply(basis[m], w);
    if (m > 0)
      for (long long i = 0; i < n; ++i) w[i] -= beta[m - 1] * basis[m - 1][i];
    double a = std::inner_product(w.begin(), w.end(), basis[m].begin(), 0.0);
    alpha.push_back(a);
    for (long long i = 0; i < n; ++i) w[i] -= a * basis[m][i];
    // Full reorthogonalization keeps the basis usable at these sizes.
    for (const std::vector<double>& q : basis) {
      const double c = std::inner_product(w.begin(), w.end(), q.begin(), 0.0);
      for (long long i = 0; i < n; ++i) w[i] -= c * q[i];
    }
    const double b = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    ++m;
    const bool breakdown = b < 1e-13;
    if (!breakdown) {
      beta.push_back(b);
      for (long long i = 0; i < n; ++i) w[i] /= b;
      basis.push_back(w);
    }
    if (breakdown || m % 8 == 0 || m == m_max) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      Eigen::VectorXd e1 = Eigen::VectorXd::Zero(m);
      e1(0) = 1.0;
      Eigen::VectorXd y1 = es.eigenvectors().transpose() * e1;
      for (int i = 0; i < m; ++i) y1(i) *= std::exp(t * es.eigenvalues()(i));
      Eigen::VectorXd u = es.eigenvectors() * y1;
      coeff.assign(u.data(), u.data() + m);
      const double tail = breakdown ? 0.0 : std::abs(beta.back() * u(m - 1)) * t;
      if (breakdown || tail < tol) done = true;
    }
  }
  std::vector<double> col(n, 0.0);
  for (int j = 0; j < static_cast<int>(coeff.size()); ++j)
    for (long long i = 0; i < n; ++i) col[i] += coeff[j] * basis[j][i];
  return col;
}

namespace {

HeatKernelValue heat_kernel_mc(const Domain& dom, const std::vector<double>& V, long long x,
                               long long y, double t, HeatClock clock, uint64_t seed,
                               long long n_paths) {
  const int two_d = 2 * dom.dim;
  const double hold_rate = clock == HeatClock::unit_rate ? 1.0 : static_cast<double>(two_d);
  std::mt19937_64 rng = substream(seed, 0x6b, static_cast<uint64_t>(y));
  std::exponential_distribution<double> exp_hold(hold_rate);
  std::uniform_int_distribution<int> pick(0, two_d - 1);
  const std::vector<long long> nbr = neighbor_table(dom);
  double sum = 0.0, sum2 = 0.0;
  for (long long p = 0; p < n_paths; ++p) {
    long long site = y;
    double clock_time = 0.0;
    double fk = 0.0;
    bool alive = true;
    while (alive) {
      const double hold = exp_hold(rng);
      const double seg = std::min(hold, t - clock_time);
      if (!V.empty()) fk += V[site] * seg;
      clock_time += hold;
      if (clock_time >= t) break;
      const int k = pick(rng);
      const long long next = nbr[two_d * site + k];
      if (next < 0)
        alive = false;  // Dirichlet boundary absorbs
      else
        site = next;
    }
    const double w = (alive && site == x) ? std::exp(fk) : 0.0;
    sum += w;
    sum2 += w * w;
  }
  HeatKernelValue out;
  out.value = sum / n_paths;
  const double var = std::max(0.0, sum2 / n_paths - out.value * out.value);
  out.std_error = std::sqrt(var / n_paths);
  return out;
}

}  // namespace

HeatKernelValue heat_kernel_tilted(const Domain& dom, const std::vector<double>& V, long long x,
                                   long long y, double t, HeatMethod method, HeatClock clock,
                                   uint64_t seed, long long n_paths) {
  if (method == HeatMethod::mc) return heat_kernel_mc(dom, V, x, y, t, clock, seed, n_paths);
  std::vector<double> col = heat_kernel_column(dom, V, y, t, clock);
  return {col[x], 0.0};
}

// ---------------------------------------------------------------------------
// Capacity and equilibrium measure.

Equilibrium srw_capacity(const Domain& box, const std::vector<long long>& K, double mass,
                         double tol) {
  if (box.boundary == Boundary::periodic && mass <= 0.0)
    throw std::invalid_argument("srw_capacity: periodic box needs mass > 0 (uniform killing)");
  if (K.empty()) throw std::invalid_argument("srw_capacity: empty set");
  const long long n = box.volume();
  std::vector<uint8_t> in_k(n, 0);
  for (long long s : K) {
    if (s < 0 || s >= n) throw std::invalid_argument("srw_capacity: site outside box");
    in_k[s] = 1;
  }
  // Hitting probability h: solve (-Δ + mass) u = rhs on the complement of K
  // (K and the exterior grounded), then h = u + 1 on K.
  std::vector<double> rhs(n, 0.0);
  for (long long i = 0; i < n; ++i) {
    if (in_k[i]) continue;
    for (const NeighborRef& nb : neighbors(box, i))
      if (!nb.outside && in_k[nb.site]) rhs[i] += 1.0;
  }
  LatticeOperator A{&box, nullptr, mass, &in_k};
  std::vector<double> u;
  cg_solve(A, rhs, u, tol);
  Equilibrium eq;
  eq.hitting.assign(n, 0.0);
  for (long long i = 0; i < n; ++i) eq.hitting[i] = in_k[i] ? 1.0 : u[i];
  eq.sites = K;
  eq.weights.reserve(K.size());
  for (long long z : K) {
    double w = (2.0 * box.dim + mass) * 1.0;
    for (const NeighborRef& nb : neighbors(box, z))
      if (!nb.outside) w -= eq.hitting[nb.site];
    if (w < -1e-6) throw std::runtime_error("srw_capacity: negative equilibrium weight");
    if (w < 0.0) w = 0.0;
    eq.weights.push_back(w);
    eq.capacity += w;
  }
  return eq;
}

// ---------------------------------------------------------------------------
// Discretization of macroscopic potentials.

double cell_average(const MacroFn& V, const Coord& cell, int N) {
  if (cell.size() != 3) throw std::invalid_argument("cell_average: need a 3d cell");
  const double h = 1.0 / N;
  const double x0 = cell[0] * h, y0 = cell[1] * h, z0 = cell[2] * h;
  auto midpoint = [&](int M) {
    const double step = h / M;
    double s = 0.0;
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k)
          s += V(x0 + (i + 0.5) * step, y0 + (j + 0.5) * step, z0 + (k + 0.5) * step);
    return s / (static_cast<double>(M) * M * M);
  };
  double prev = midpoint(1);
  double curr = midpoint(2);
  double rich = (4.0 * curr - prev) / 3.0;
  for (int M = 4; M <= 32; M *= 2) {
    const double next = midpoint(M);
    const double rich_new = (4.0 * next - curr) / 3.0;
    if (std::abs(rich_new - rich) < 1e-9 * std::max(1.0, std::abs(rich_new))) return rich_new;
    prev = curr;
    curr = next;
    rich = rich_new;
  }
  return rich;
}

PotentialOnLattice discretize_potential(const MacroFn& V, int N, const Domain& dom) {
  if (N < 1) throw std::invalid_argument("discretize_potential: N must be >= 1");
  PotentialOnLattice out;
  out.N = N;
  out.dom = dom;
  out.values.assign(dom.volume(), 0.0);
  const double n2 = 1.0 / (static_cast<double>(N) * N);
  double sup = 0.0;
  for (long long i = 0; i < dom.volume(); ++i) {
    const Coord c = dom.coord_of(i);
    const double avg = cell_average(V, c, N);
    out.values[i] = n2 * avg;
    // Center value as a cheap proxy for the sup over the cell.
    const double ctr = V((c[0] + 0.5) / N, (c[1] + 0.5) / N, (c[2] + 0.5) / N);
    sup = std::max(sup, std::max(std::abs(avg), std::abs(ctr)));
  }
  out.macro_sup = sup;
  return out;
}

// ---------------------------------------------------------------------------
// Orbit-reduced pair sums.

namespace {

// The 48 signed axis permutations acting on centered coordinates.
struct SignedPerm {
  int perm[3];
  int sign[3];
};

std::vector<SignedPerm> octahedral_group() {
  std::vector<SignedPerm> g;
  int axes[3] = {0, 1, 2};
  std::sort(axes, axes + 3);
  do {
    for (int s = 0; s < 8; ++s) {
      SignedPerm e;
      for (int a = 0; a < 3; ++a) {
        e.perm[a] = axes[a];
        e.sign[a] = (s >> a) & 1 ? -1 : 1;
      }
      g.push_back(e);
    }
  } while (std::next_permutation(axes, axes + 3));
  return g;
}

}  // namespace

std::vector<std::pair<long long, int>> octahedral_orbits(const Domain& dom,
                                                         const std::vector<long long>& sites,
                                                         const std::vector<double>& a) {
  if (dom.dim != 3) return {};
  const int s = dom.side[0];
  // Odd centered boxes reflect as c -> -c (fixed center site); even ones are
  // cell grids whose mirror is c -> -1-c.
  bool cell_grid = false;
  if (s % 2 == 0)
    cell_grid = true;
  for (int ax = 0; ax < 3; ++ax) {
    if (dom.side[ax] != s) return {};
    if (cell_grid && dom.origin[ax] != -s / 2) return {};
    if (!cell_grid && dom.origin[ax] != -(s - 1) / 2) return {};
  }
  std::unordered_map<long long, double> weight;
  weight.reserve(sites.size() * 2);
  for (size_t i = 0; i < sites.size(); ++i) weight[sites[i]] = a[i];
  const std::vector<SignedPerm> group = octahedral_group();
  std::unordered_map<long long, int> orbit_of;
  std::vector<std::pair<long long, int>> orbits;
  for (long long site : sites) {
    if (orbit_of.count(site)) continue;
    const Coord c = dom.coord_of(site);
    const double w0 = weight[site];
    std::vector<long long> members;
    for (const SignedPerm& g : group) {
      Coord img(3);
      for (int ax = 0; ax < 3; ++ax) {
        const int v = c[g.perm[ax]];
        img[ax] = g.sign[ax] > 0 ? v : (cell_grid ? -1 - v : -v);
      }
      if (!dom.contains(img)) return {};
      const long long j = dom.index_of(img);
      auto it = weight.find(j);
      if (it == weight.end()) return {};  // set not symmetric
      if (std::abs(it->second - w0) > 1e-12 * std::max(1.0, std::abs(w0))) return {};
      if (!orbit_of.count(j)) {
        orbit_of[j] = static_cast<int>(orbits.size());
        members.push_back(j);
      }
    }
    orbits.emplace_back(site, static_cast<int>(members.size()));
  }
  return orbits;
}

double squared_kernel_form(const Domain& dom, const std::vector<long long>& sites,
                           const std::vector<double>& a,
                           const std::function<const std::vector<double>&(long long)>& column,
                           bool use_symmetry) {
  if (sites.size() != a.size())
    throw std::invalid_argument("squared_kernel_form: sites/weights size mismatch");
  std::vector<std::pair<long long, int>> orbits;
  if (use_symmetry) orbits = octahedral_orbits(dom, sites, a);
  std::unordered_map<long long, double> weight;
  weight.reserve(sites.size() * 2);
  for (size_t i = 0; i < sites.size(); ++i) weight[sites[i]] = a[i];
  double total = 0.0;
  if (!orbits.empty()) {
    for (const auto& [rep, count] : orbits) {
      const std::vector<double>& col = column(rep);
      double inner = 0.0;
      for (size_t i = 0; i < sites.size(); ++i) {
        const double k = col[sites[i]];
        inner += a[i] * k * k;
      }
      total += static_cast<double>(count) * weight[rep] * inner;
    }
  } else {
    for (size_t j = 0; j < sites.size(); ++j) {
      const std::vector<double>& col = column(sites[j]);
      double inner = 0.0;
      for (size_t i = 0; i < sites.size(); ++i) {
        const double k = col[sites[i]];
        inner += a[i] * k * k;
      }
      total += a[j] * inner;
    }
  }
  return total;
}

}  // namespace gibbs
