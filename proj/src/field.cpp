#include "gibbs/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gibbs/fourier.hpp"
#include "gibbs/rng.hpp"

namespace gibbs {

double TiltSpec::admissibility_product(const Domain& dom) const {
  if (V.empty()) return 0.0;
  if (static_cast<long long>(V.size()) != dom.volume())
    throw std::invalid_argument("TiltSpec: V size mismatch");
  double sup = 0.0;
  std::vector<Coord> support;
  for (long long i = 0; i < dom.volume(); ++i) {
    if (V[i] > 0.0) {
      sup = std::max(sup, V[i]);
      support.push_back(dom.coord_of(i));
    }
  }
  if (support.empty()) return 0.0;
  double diam2 = 0.0;
  if (support.size() <= 2000) {
    for (size_t i = 0; i < support.size(); ++i)
      for (size_t j = i + 1; j < support.size(); ++j) {
        double d2 = 0.0;
        for (int a = 0; a < dom.dim; ++a) {
          const double d = support[i][a] - support[j][a];
          d2 += d * d;
        }
        diam2 = std::max(diam2, d2);
      }
  } else {
    // Bounding-box diagonal; an upper bound on the diameter, so conservative.
    for (int a = 0; a < dom.dim; ++a) {
      int lo = support[0][a], hi = support[0][a];
      for (const Coord& c : support) {
        lo = std::min(lo, c[a]);
        hi = std::max(hi, c[a]);
      }
      diam2 += static_cast<double>(hi - lo) * (hi - lo);
    }
  }
  return sup * diam2;
}

void TiltSpec::check_admissible(const Domain& dom) const {
  const double prod = admissibility_product(dom);
  if (prod >= lambda0)
    throw std::invalid_argument("tilt not admissible: sup V+ x diam(supp V+)^2 = " +
                                std::to_string(prod) + " >= " + std::to_string(lambda0));
  if (!h.empty() && static_cast<long long>(h.size()) != dom.volume())
    throw std::invalid_argument("TiltSpec: h size mismatch");
}

double drift_at(const Domain& dom, const Potential& u, const std::vector<double>& phi,
                const TiltSpec& tilt, double mass, long long x) {
  double d = 0.0;
  const double px = phi[x];
  for (const NeighborRef& nb : neighbors(dom, x)) {
    const double py = nb.outside ? 0.0 : phi[nb.site];
    d -= u.u_prime(px - py);
  }
  if (!tilt.V.empty()) d += tilt.V[x] * px;
  if (!tilt.h.empty()) d += tilt.h[x];
  d -= mass * px;
  return d;
}

namespace {

// Fills the drift vector, evaluating U' once per undirected edge when U is
// known to be odd (quadratic, cosine); tabulated potentials fall back to the
// per-site form.
void fill_drift(const Domain& dom, const std::vector<long long>& nbr, const Potential& u,
                const std::vector<double>& phi, const TiltSpec& tilt, double mass,
                std::vector<double>& drift) {
  const long long n = dom.volume();
  const int deg = 2 * dom.dim;
  drift.resize(n);
  if (u.kind == PotentialKind::table) {
    for (long long x = 0; x < n; ++x) {
      double d = 0.0;
      const double px = phi[x];
      for (int k = 0; k < deg; ++k) {
        const long long y = nbr[deg * x + k];
        const double py = y < 0 ? 0.0 : phi[y];
        d -= u.u_prime(px - py);
      }
      if (!tilt.V.empty()) d += tilt.V[x] * px;
      if (!tilt.h.empty()) d += tilt.h[x];
      d -= mass * px;
      drift[x] = d;
    }
    return;
  }
  for (long long x = 0; x < n; ++x) {
    double d = -mass * phi[x];
    if (!tilt.V.empty()) d += tilt.V[x] * phi[x];
    if (!tilt.h.empty()) d += tilt.h[x];
    drift[x] = d;
  }
  for (long long x = 0; x < n; ++x) {
    const double px = phi[x];
    for (int axis = 0; axis < dom.dim; ++axis) {
      const long long up = nbr[deg * x + 2 * axis + 1];
      if (up < 0) {
        drift[x] -= u.u_prime(px);
      } else {
        const double d = u.u_prime(px - phi[up]);
        drift[x] -= d;
        drift[up] += d;  // U' is odd, so the reverse edge term is -d
      }
      if (nbr[deg * x + 2 * axis] < 0) drift[x] -= u.u_prime(px);
    }
  }
}

}  // namespace

void langevin_step(const Domain& dom, const std::vector<long long>& nbr, const Potential& u,
                   FieldState& state, const TiltSpec& tilt, double mass, double dt,
                   std::mt19937_64& rng, bool zero_noise) {
  const long long n = dom.volume();
  if (static_cast<long long>(state.values.size()) != n)
    throw std::invalid_argument("langevin_step: field size mismatch");
  static thread_local std::vector<double> drift;
  fill_drift(dom, nbr, u, state.values, tilt, mass, drift);
  const double sigma = std::sqrt(2.0 * dt);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (long long x = 0; x < n; ++x) {
    double dx = dt * drift[x];
    if (!zero_noise) dx += sigma * gauss(rng);
    state.values[x] += dx;
  }
  state.time += dt;
}

void langevin_step(const Domain& dom, const Potential& u, FieldState& state, const TiltSpec& tilt,
                   double mass, double dt, std::mt19937_64& rng, bool zero_noise) {
  langevin_step(dom, neighbor_table(dom), u, state, tilt, mass, dt, rng, zero_noise);
}

std::pair<double, double> heat_bath_moments(const Domain& dom, const std::vector<double>& phi,
                                            const TiltSpec& tilt, double mass, long long x) {
  const double v = tilt.V.empty() ? 0.0 : tilt.V[x];
  const double h = tilt.h.empty() ? 0.0 : tilt.h[x];
  const double prec = 2.0 * dom.dim + mass - v;
  if (prec <= 0.0)
    throw std::invalid_argument("heat_bath_moments: non-positive conditional precision");
  double s = h;
  for (const NeighborRef& nb : neighbors(dom, x))
    if (!nb.outside) s += phi[nb.site];
  return {s / prec, 1.0 / prec};
}

void heat_bath_sweep(const Domain& dom, const std::vector<long long>& nbr, const Potential& u,
                     FieldState& state, const TiltSpec& tilt, double mass, std::mt19937_64& rng) {
  if (u.kind != PotentialKind::quadratic)
    throw std::invalid_argument("heat_bath_sweep: only the quadratic potential has Gaussian site conditionals");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const long long n = dom.volume();
  const int deg = 2 * dom.dim;
  const double base_prec = 2.0 * dom.dim + mass;
  std::vector<double>& phi = state.values;
  for (long long x = 0; x < n; ++x) {
    const double prec = base_prec - (tilt.V.empty() ? 0.0 : tilt.V[x]);
    if (prec <= 0.0)
      throw std::invalid_argument("heat_bath_sweep: non-positive conditional precision");
    double s = tilt.h.empty() ? 0.0 : tilt.h[x];
    for (int k = 0; k < deg; ++k) {
      const long long y = nbr[deg * x + k];
      if (y >= 0) s += phi[y];
    }
    phi[x] = s / prec + std::sqrt(1.0 / prec) * gauss(rng);
  }
  state.time += 1.0;
}

void heat_bath_sweep(const Domain& dom, const Potential& u, FieldState& state,
                     const TiltSpec& tilt, double mass, std::mt19937_64& rng) {
  heat_bath_sweep(dom, neighbor_table(dom), u, state, tilt, mass, rng);
}

void check_step_stability(const Domain& dom, const Potential& u, const TiltSpec& tilt,
                          const ChainConfig& cfg) {
  if (cfg.kind != SamplerKind::langevin && cfg.kind != SamplerKind::langevin_fourier) return;
  double vmax = 0.0;
  for (double v : tilt.V) vmax = std::max(vmax, std::abs(v));
  const double lip = 2.0 * dom.dim * u.c2 + vmax + cfg.mass;
  if (cfg.dt * lip >= 0.5)
    throw std::invalid_argument("unstable step size: dt (2 d c2 + sup|V| + mass) = " +
                                std::to_string(cfg.dt * lip) + " >= 0.5");
}

void run_chain(const Domain& dom, const Potential& u, const TiltSpec& tilt, const ChainConfig& cfg,
               const std::function<void(const FieldState&)>& observer) {
  tilt.check_admissible(dom);
  check_step_stability(dom, u, tilt, cfg);
  if (dom.boundary == Boundary::periodic && cfg.mass <= 0.0 &&
      cfg.kind != SamplerKind::heat_bath)
    throw std::invalid_argument("run_chain: periodic domain needs mass > 0");
  const long long n = dom.volume();
  std::mt19937_64 rng = substream(cfg.seed, 0xf1e1d, static_cast<uint64_t>(cfg.kind));
  FieldState state;
  state.values.assign(n, 0.0);

  switch (cfg.kind) {
    case SamplerKind::fft_exact: {
      auto is_zero = [](const std::vector<double>& a) {
        return std::all_of(a.begin(), a.end(), [](double x) { return x == 0.0; });
      };
      if (u.kind != PotentialKind::quadratic || !(tilt.V.empty() || is_zero(tilt.V)) ||
          !(tilt.h.empty() || is_zero(tilt.h)))
        throw std::invalid_argument("fft_exact: only the untilted quadratic field is exactly samplable");
      PeriodicGaussian pg(dom, cfg.mass);
      for (long long s = 0; s < cfg.n_samples; ++s) {
        state.values = pg.sample(rng);
        state.time = static_cast<double>(s);
        observer(state);
      }
      return;
    }
    case SamplerKind::heat_bath: {
      const std::vector<long long> nbr = neighbor_table(dom);
      for (long long s = 0; s < cfg.burn_in; ++s)
        heat_bath_sweep(dom, nbr, u, state, tilt, cfg.mass, rng);
      for (long long s = 0; s < cfg.n_samples; ++s) {
        for (long long t = 0; t < cfg.thinning; ++t)
          heat_bath_sweep(dom, nbr, u, state, tilt, cfg.mass, rng);
        observer(state);
      }
      return;
    }
    case SamplerKind::langevin: {
      const std::vector<long long> nbr = neighbor_table(dom);
      for (long long s = 0; s < cfg.burn_in; ++s)
        langevin_step(dom, nbr, u, state, tilt, cfg.mass, cfg.dt, rng);
      for (long long s = 0; s < cfg.n_samples; ++s) {
        for (long long t = 0; t < cfg.thinning; ++t)
          langevin_step(dom, nbr, u, state, tilt, cfg.mass, cfg.dt, rng);
        observer(state);
      }
      return;
    }
    case SamplerKind::langevin_fourier: {
      // Preconditioned Euler step: φ += dt M drift + sqrt(2 dt) M^{1/2} ξ with
      // M = (mass - Δ)^{-1} applied spectrally. Same invariant measure in the
      // dt -> 0 limit, but the relaxation time is O(1) instead of O(side²).
      PeriodicGaussian pg(dom, cfg.mass);
      const std::vector<long long> nbr = neighbor_table(dom);
      std::vector<double> drift(n), noise(n);
      std::vector<std::complex<double>> work(n);
      std::normal_distribution<double> gauss(0.0, 1.0);
      const double sigma = std::sqrt(2.0 * cfg.dt);
      auto step = [&]() {
        fill_drift(dom, nbr, u, state.values, tilt, cfg.mass, drift);
        for (long long i = 0; i < n; ++i) work[i] = drift[i];
        pg.fft.forward(work);
        for (long long i = 0; i < n; ++i) work[i] /= pg.lambda[i];
        pg.fft.inverse(work);
        for (long long i = 0; i < n; ++i) drift[i] = work[i].real();
        for (long long i = 0; i < n; ++i) work[i] = gauss(rng);
        pg.fft.forward(work);
        for (long long i = 0; i < n; ++i) work[i] /= std::sqrt(pg.lambda[i]);
        pg.fft.inverse(work);
        for (long long i = 0; i < n; ++i) noise[i] = work[i].real();
        for (long long x = 0; x < n; ++x) state.values[x] += cfg.dt * drift[x] + sigma * noise[x];
        state.time += cfg.dt;
      };
      for (long long s = 0; s < cfg.burn_in; ++s) step();
      for (long long s = 0; s < cfg.n_samples; ++s) {
        for (long long t = 0; t < cfg.thinning; ++t) step();
        observer(state);
      }
      return;
    }
  }
}

std::vector<std::vector<double>> run_chain_observables(
    const Domain& dom, const Potential& u, const TiltSpec& tilt, const ChainConfig& cfg,
    const std::vector<std::function<double(const std::vector<double>&)>>& observables) {
  std::vector<std::vector<double>> series(observables.size());
  for (auto& s : series) s.reserve(cfg.n_samples);
  run_chain(dom, u, tilt, cfg, [&](const FieldState& st) {
    for (size_t i = 0; i < observables.size(); ++i) series[i].push_back(observables[i](st.values));
  });
  return series;
}

}  // namespace gibbs
