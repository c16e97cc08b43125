#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "gibbs/field.hpp"
#include "gibbs/fourier.hpp"
#include "gibbs/green.hpp"
#include "gibbs/lattice.hpp"
#include "gibbs/potential.hpp"
#include "gibbs/stats.hpp"

using namespace gibbs;

namespace {

std::vector<double> random_field(const Domain& dom, uint64_t seed, double amp = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<double> phi(dom.volume());
  for (auto& v : phi) v = u(rng);
  return phi;
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("drift matches the hamiltonian gradient on hand-built configurations") {
  Domain dom = Domain::centered(3, 3, Boundary::dirichlet);
  const long long c = dom.index_of({0, 0, 0});
  std::vector<double> phi(dom.volume(), 0.0);
  phi[c] = 1.0;
  Potential quad = Potential::quadratic();
  TiltSpec none;

  // Center of a 3^3 box has six interior neighbours, all at zero.
  CHECK(drift_at(dom, quad, phi, none, 0.0, c) == doctest::Approx(-6.0).epsilon(1e-14));

  TiltSpec tv;
  tv.V.assign(dom.volume(), 0.0);
  tv.V[c] = 0.3;
  CHECK(drift_at(dom, quad, phi, tv, 0.0, c) == doctest::Approx(-5.7).epsilon(1e-14));

  tv.h.assign(dom.volume(), 0.0);
  tv.h[c] = 0.2;
  CHECK(drift_at(dom, quad, phi, tv, 0.1, c) == doctest::Approx(-5.6).epsilon(1e-14));

  // Dirichlet boundaries read exterior sites as zero; periodic boundaries wrap.
  Domain per = Domain::centered(3, 3, Boundary::periodic);
  std::vector<double> psi(dom.volume(), 0.0);
  const long long far_site = per.index_of({-1, 0, 0});
  const long long face_site = per.index_of({1, 0, 0});
  psi[far_site] = 0.7;
  const double d_per = drift_at(per, quad, psi, none, 0.0, face_site);
  const double d_dir = drift_at(dom, quad, psi, none, 0.0, dom.index_of({1, 0, 0}));
  CHECK(d_per - d_dir == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("zero-noise euler step agrees with the per-site drift") {
  struct Scenario {
    Domain dom;
    Potential pot;
    TiltSpec tilt;
    double mass;
  };
  std::vector<Scenario> runs;
  runs.push_back({Domain::centered(3, 5, Boundary::dirichlet), Potential::quadratic(), {}, 0.0});
  {
    Scenario s{Domain::centered(3, 4, Boundary::periodic), Potential::cosine(0.4), {}, 0.3};
    s.tilt.V.assign(s.dom.volume(), 0.0);
    s.tilt.V[s.dom.index_of({0, 0, 0})] = 0.03;
    s.tilt.h.assign(s.dom.volume(), 0.0);
    s.tilt.h[s.dom.index_of({1, 0, 0})] = -0.1;
    runs.push_back(s);
  }
  {
    // Tabulated potential takes the per-site fallback path inside the stepper.
    Potential base = Potential::cosine(0.3);
    std::vector<double> eta, upp;
    for (int k = -2000; k <= 2000; ++k) {
      eta.push_back(k * 0.01);
      upp.push_back(base.u_second(k * 0.01));
    }
    runs.push_back({Domain::centered(3, 4, Boundary::dirichlet),
                    Potential::from_table(eta, upp, 0.7, 1.3), {}, 0.1});
  }

  const double dt = 0.01;
  uint64_t seed = 99;
  for (auto& s : runs) {
    std::vector<double> before = random_field(s.dom, seed++, 0.8);
    FieldState state;
    state.values = before;
    std::mt19937_64 rng(7);
    langevin_step(s.dom, s.pot, state, s.tilt, s.mass, dt, rng, /*zero_noise=*/true);
    for (long long x = 0; x < s.dom.volume(); ++x) {
      const double expected = before[x] + dt * drift_at(s.dom, s.pot, before, s.tilt, s.mass, x);
      CHECK(state.values[x] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("heat-bath conditional moments") {
  Domain dom = Domain::centered(3, 3, Boundary::dirichlet);
  const long long c = dom.index_of({0, 0, 0});
  std::vector<double> phi(dom.volume(), 0.0);
  TiltSpec none;

  auto [m0, v0] = heat_bath_moments(dom, phi, none, 0.0, c);
  CHECK(m0 == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(v0 == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

  phi[dom.index_of({1, 0, 0})] = 1.0;
  phi[dom.index_of({-1, 0, 0})] = 1.0;
  phi[dom.index_of({0, 1, 0})] = 1.0;
  auto [m1, v1] = heat_bath_moments(dom, phi, none, 0.0, c);
  CHECK(m1 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(v1 == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

  TiltSpec tilt;
  tilt.V.assign(dom.volume(), 0.0);
  tilt.V[c] = 0.5;
  auto [m2, v2] = heat_bath_moments(dom, phi, tilt, 0.0, c);
  CHECK(m2 == doctest::Approx(3.0 / 5.5).epsilon(1e-14));
  CHECK(v2 == doctest::Approx(1.0 / 5.5).epsilon(1e-14));

  tilt.h.assign(dom.volume(), 0.0);
  tilt.h[c] = 0.2;
  auto [m3, v3] = heat_bath_moments(dom, phi, tilt, 0.0, c);
  CHECK(m3 == doctest::Approx(3.2 / 5.5).epsilon(1e-14));
  CHECK(v3 == doctest::Approx(1.0 / 5.5).epsilon(1e-14));

  Potential cos3 = Potential::cosine(0.3);
  FieldState state;
  state.values = phi;
  std::mt19937_64 rng(5);
  CHECK_THROWS_AS(heat_bath_sweep(dom, cos3, state, none, 0.0, rng), std::invalid_argument);
}

TEST_CASE("single-site chain matches the exact euler-maruyama variance") {
  // One Dirichlet site: phi' = (1 - 6 dt) phi + sqrt(2 dt) xi, whose
  // stationary variance 2 dt / (1 - (1 - 6 dt)^2) = 1 / (6 (1 - 3 dt))
  // carries the O(dt) discretisation bias explicitly.
  Domain dom = Domain::centered(3, 1, Boundary::dirichlet);
  const double dt = 0.01;
  const double exact = 1.0 / (6.0 * (1.0 - 3.0 * dt));

  ChainConfig cfg;
  cfg.kind = SamplerKind::langevin;
  cfg.dt = dt;
  cfg.burn_in = 2000;
  cfg.thinning = 5;
  cfg.n_samples = 40000;
  cfg.seed = 2026;
  auto series = run_chain_observables(dom, Potential::quadratic(), {}, cfg,
                                      {[](const std::vector<double>& phi) { return phi[0]; }});
  Estimate var = variance_estimate(series[0]);
  CHECK(std::abs(var.mean - exact) <= 3.0 * var.std_error);
}

TEST_CASE("samplers agree with the dirichlet green function") {
  Domain dom = Domain::centered(3, 5, Boundary::dirichlet);
  const long long c = dom.index_of({0, 0, 0});
  const long long c1 = dom.index_of({1, 0, 0});
  LatticeGreen g = green_solve(dom, {}, 0.0);
  std::vector<double> col = g.column(c);

  auto run_cov = [&](const ChainConfig& cfg) {
    auto series = run_chain_observables(
        dom, Potential::quadratic(), {}, cfg,
        {[&](const std::vector<double>& phi) { return phi[c] * phi[c]; },
         [&](const std::vector<double>& phi) { return phi[c] * phi[c1]; }});
    return std::array<Estimate, 2>{batch_means(series[0]), batch_means(series[1])};
  };

  ChainConfig hb;
  hb.kind = SamplerKind::heat_bath;
  hb.burn_in = 500;
  hb.thinning = 2;
  hb.n_samples = 30000;
  hb.seed = 11;
  auto [hb_var, hb_cov] = run_cov(hb);
  CHECK(std::abs(hb_var.mean - col[c]) <= 3.0 * hb_var.std_error);
  CHECK(std::abs(hb_cov.mean - col[c1]) <= 3.0 * hb_cov.std_error);

  ChainConfig la;
  la.kind = SamplerKind::langevin;
  la.dt = 0.005;
  la.burn_in = 4000;
  la.thinning = 5;
  la.n_samples = 20000;
  la.seed = 12;
  auto [la_var, la_cov] = run_cov(la);
  CHECK(std::abs(la_var.mean - col[c]) <= 3.0 * la_var.std_error);
  CHECK(std::abs(la_cov.mean - col[c1]) <= 3.0 * la_cov.std_error);
}

TEST_CASE("fourier samplers hit the periodic covariance") {
  Domain dom = Domain::centered(3, 8, Boundary::periodic);
  const double mass = 0.5;
  const long long c = dom.index_of({0, 0, 0});
  const long long c1 = dom.index_of({1, 0, 0});
  PeriodicGaussian pg(dom, mass);
  std::vector<double> kern = pg.kernel_column(1);
  const double k0 = kern[0];
  const double k1 = kern[1];  // displacement (1,0,0): axis 0 is the fastest raw index

  auto run_cov = [&](const ChainConfig& cfg) {
    auto series = run_chain_observables(
        dom, Potential::quadratic(), {}, cfg,
        {[&](const std::vector<double>& phi) { return phi[c] * phi[c]; },
         [&](const std::vector<double>& phi) { return phi[c] * phi[c1]; }});
    return std::array<Estimate, 2>{batch_means(series[0]), batch_means(series[1])};
  };

  ChainConfig fx;
  fx.kind = SamplerKind::fft_exact;
  fx.n_samples = 30000;
  fx.mass = mass;
  fx.seed = 21;
  auto [fx_var, fx_cov] = run_cov(fx);
  CHECK(std::abs(fx_var.mean - k0) <= 3.0 * fx_var.std_error);
  CHECK(std::abs(fx_cov.mean - k1) <= 3.0 * fx_cov.std_error);

  // The preconditioned Euler chain equilibrates every Fourier mode to
  // (1 / lambda) / (1 - dt / 2): the bias factor is mode-independent.
  ChainConfig lf;
  lf.kind = SamplerKind::langevin_fourier;
  lf.dt = 0.05;
  lf.burn_in = 400;
  lf.thinning = 3;
  lf.n_samples = 30000;
  lf.mass = mass;
  lf.seed = 22;
  auto [lf_var, lf_cov] = run_cov(lf);
  const double inflate = 1.0 / (1.0 - lf.dt / 2.0);
  CHECK(std::abs(lf_var.mean - k0 * inflate) <= 3.0 * lf_var.std_error);
  CHECK(std::abs(lf_cov.mean - k1 * inflate) <= 3.0 * lf_cov.std_error);
}

TEST_CASE("stability guard rejects coarse steps") {
  Domain dom = Domain::centered(3, 3, Boundary::dirichlet);
  ChainConfig cfg;
  cfg.kind = SamplerKind::langevin;

  cfg.dt = 0.1;  // 0.1 * 6 = 0.6 >= 1/2
  CHECK_THROWS_AS(check_step_stability(dom, Potential::quadratic(), {}, cfg),
                  std::invalid_argument);
  cfg.dt = 0.04;  // 0.24 < 1/2
  CHECK_NOTHROW(check_step_stability(dom, Potential::quadratic(), {}, cfg));

  Potential cos5 = Potential::cosine(0.5);  // c2 = 1.5
  cfg.dt = 0.06;                            // 0.06 * 9 = 0.54
  CHECK_THROWS_AS(check_step_stability(dom, cos5, {}, cfg), std::invalid_argument);
  cfg.dt = 0.05;  // 0.45 < 1/2
  CHECK_NOTHROW(check_step_stability(dom, cos5, {}, cfg));
}

TEST_CASE("noise-free flow contracts to the flat configuration") {
  Domain dom = Domain::centered(3, 3, Boundary::dirichlet);
  FieldState state;
  state.values.assign(dom.volume(), 1.0);
  std::mt19937_64 rng(3);
  Potential quad = Potential::quadratic();
  double prev = 1.0;
  for (int step = 0; step < 300; ++step) {
    langevin_step(dom, quad, state, {}, 0.0, 0.05, rng, /*zero_noise=*/true);
    double sup = 0.0;
    for (double v : state.values) sup = std::max(sup, std::abs(v));
    CHECK(sup <= prev + 1e-15);
    prev = sup;
  }
  CHECK(prev <= 1e-6);
}

TEST_CASE("observable wrapper shapes and tilt admissibility") {
  Domain dom = Domain::centered(3, 3, Boundary::dirichlet);
  ChainConfig cfg;
  cfg.kind = SamplerKind::heat_bath;
  cfg.n_samples = 7;
  cfg.seed = 4;
  auto series = run_chain_observables(
      dom, Potential::quadratic(), {}, cfg,
      {[](const std::vector<double>& phi) { return phi[0]; },
       [](const std::vector<double>& phi) { return phi[1] * phi[1]; }});
  REQUIRE(series.size() == 2);
  CHECK(series[0].size() == 7);
  CHECK(series[1].size() == 7);

  const long long c = dom.index_of({0, 0, 0});
  const long long c1 = dom.index_of({1, 0, 0});
  const long long c2 = dom.index_of({-1, 0, 0});

  TiltSpec one_site;
  one_site.V.assign(dom.volume(), 0.0);
  one_site.V[c] = 0.3;
  CHECK(one_site.admissibility_product(dom) == doctest::Approx(0.0));
  CHECK_NOTHROW(one_site.check_admissible(dom));

  TiltSpec pair_ok;
  pair_ok.V.assign(dom.volume(), 0.0);
  pair_ok.V[c] = 0.04;
  pair_ok.V[c1] = 0.04;
  CHECK(pair_ok.admissibility_product(dom) == doctest::Approx(0.04));
  CHECK_NOTHROW(pair_ok.check_admissible(dom));

  TiltSpec pair_bad = pair_ok;
  pair_bad.V[c] = 0.1;
  pair_bad.V[c1] = 0.1;
  CHECK_THROWS_AS(pair_bad.check_admissible(dom), std::invalid_argument);

  // Distance-2 support: diameter 2, so sup V+ = 0.02 gives product 0.08.
  TiltSpec spread;
  spread.V.assign(dom.volume(), 0.0);
  spread.V[c1] = 0.02;
  spread.V[c2] = 0.02;
  CHECK(spread.admissibility_product(dom) == doctest::Approx(0.08));
  CHECK_THROWS_AS(spread.check_admissible(dom), std::invalid_argument);

  // Negative V carries no admissibility weight.
  TiltSpec attractive;
  attractive.V.assign(dom.volume(), -5.0);
  CHECK(attractive.admissibility_product(dom) == doctest::Approx(0.0));
  CHECK_NOTHROW(attractive.check_admissible(dom));
}

}  // TEST_SUITE
