#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "gibbs/continuum.hpp"
#include "gibbs/field.hpp"
#include "gibbs/green.hpp"
#include "gibbs/harness.hpp"
#include "gibbs/lattice.hpp"
#include "gibbs/potential.hpp"
#include "gibbs/soup.hpp"
#include "gibbs/stats.hpp"

using namespace gibbs;

namespace {

std::vector<double> normal_series(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> out(n);
  for (double& x : out) x = gauss(rng);
  return out;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("rescaling constants and the macroscopic test bump") {
  CHECK(rescale_factor(3, 4) == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(rescale_factor(3, 1) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));

  TestFunction f;
  f.L = 0.5;
  f.lambda = 0.3;
  f.center = {0.25, 0.0, 0.0};
  // Center value lambda/L^2, smooth decay, compact support.
  CHECK(f(0.25, 0.0, 0.0) == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(f.sup_norm() == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(f(0.25 + 0.5, 0.0, 0.0) == 0.0);
  CHECK(f(0.25, 0.9, 0.0) == 0.0);
  CHECK(f(0.3, 0.1, -0.1) > 0.0);
  CHECK(f(0.3, 0.1, -0.1) < f.sup_norm());
  CHECK(f.smallness_product() == doctest::Approx(1.2).epsilon(1e-14));
  MacroFn fn = f.fn();
  CHECK(fn(0.3, 0.1, -0.1) == doctest::Approx(f(0.3, 0.1, -0.1)).epsilon(1e-14));

  // The rescaled field reads the cell under z*N and applies the factor.
  Domain dom = Domain::centered(3, 8, Boundary::dirichlet);
  std::vector<double> phi(dom.volume(), 1.0);
  CHECK(rescale_field(dom, phi, 4, {0.1, 0.1, 0.1}) ==
        doctest::Approx(rescale_factor(3, 4)).epsilon(1e-14));
  // Outside a dirichlet box the field is extended by zero.
  CHECK(rescale_field(dom, phi, 4, {1.5, 0.0, 0.0}) == 0.0);

  std::vector<double> v = {1.0, 2.0};
  std::vector<double> w = {3.0, 4.0};
  CHECK(quadratic_functional(v, w) == doctest::Approx(41.0).epsilon(1e-14));
  CHECK(linear_functional(v, w) == doctest::Approx(11.0).epsilon(1e-14));
  CHECK_THROWS_AS((void)quadratic_functional(v, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)linear_functional(v, {1.0}), std::invalid_argument);
}

TEST_CASE("wick functional recovers gaussian moments") {
  const size_t n = 50000;
  std::vector<double> series = normal_series(n, 424242);

  WickReport rep = wick_functional(series, 0.4);
  CHECK(std::abs(rep.split_mean) <= 4.0 * rep.split_mean_se);
  CHECK(std::abs(rep.variance - 1.0) <= 4.0 * rep.variance_se);
  // log E[exp(l(X - mean))] = l^2/2 for a standard gaussian.
  CHECK(std::abs(rep.mgf_log - 0.08) <= 4.0 * rep.mgf_log_se);
  CHECK(rep.mgf_lambda == 0.4);
  // n_eff counts effective batches of the jackknife, not raw samples.
  CHECK(rep.n_eff > 100.0);
  CHECK(rep.top1_share < 0.2);
  CHECK_FALSE(rep.tail_warning);

  // Degenerate tilt: all weights are 1, the log mean is exactly 0.
  WickReport flat = wick_functional(series, 0.0);
  CHECK(flat.mgf_log == doctest::Approx(0.0).epsilon(1e-15));

  CHECK_THROWS_AS((void)wick_functional(std::vector<double>(63, 1.0), 0.1),
                  std::invalid_argument);
}

TEST_CASE("joint tilt centers only the quadratic series") {
  // Alternating pairs make the weight set exactly two-valued, so the log mean
  // has a closed form and the batch error vanishes.
  const size_t n = 128;
  std::vector<double> quad(n), lin(n);
  for (size_t i = 0; i < n; ++i) {
    quad[i] = (i % 2 == 0) ? 1.0 : 3.0;  // mean 2, centered to -1/+1
    lin[i] = (i % 2 == 0) ? 2.0 : 4.0;   // used raw
  }
  const double a = 0.5, b = 0.25;
  ThetaReport rep = theta_functional(quad, lin, a, b);
  const double w0 = std::exp(a * -1.0 + b * 2.0);
  const double w1 = std::exp(a * 1.0 + b * 4.0);
  CHECK(rep.log_value == doctest::Approx(std::log(0.5 * (w0 + w1))).epsilon(1e-12));
  CHECK(rep.se < 1e-12);

  ThetaReport zero = theta_functional(quad, lin, 0.0, 0.0);
  CHECK(zero.log_value == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(zero.se < 1e-15);

  CHECK_THROWS_AS((void)theta_functional(quad, std::vector<double>(n - 1, 0.0), a, b),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      (void)theta_functional(std::vector<double>(32, 0.0), std::vector<double>(32, 0.0), a, b),
      std::invalid_argument);
}

TEST_CASE("antithetic and plain log-mgf agree on symmetric series") {
  // Two-valued symmetric series: cosh weights are constant, the answer exact.
  std::vector<double> alt(128);
  for (size_t i = 0; i < alt.size(); ++i) alt[i] = (i % 2 == 0) ? 0.7 : -0.7;
  ThetaReport exact = log_mgf_antithetic(alt, 1.0);
  CHECK(exact.log_value == doctest::Approx(std::log(std::cosh(0.7))).epsilon(1e-12));
  CHECK(exact.se < 1e-12);

  std::vector<double> series = normal_series(60000, 515151);
  const double s = 0.6;
  ThetaReport anti = log_mgf_antithetic(series, s);
  ThetaReport plain = log_mgf_plain(series, s);
  // Both estimate log E[exp(sX)] = s^2/2 for the symmetric gaussian series.
  CHECK(std::abs(anti.log_value - 0.18) <= 4.0 * anti.se + 1e-4);
  CHECK(std::abs(plain.log_value - 0.18) <= 4.0 * plain.se);

  CHECK_THROWS_AS((void)log_mgf_antithetic(std::vector<double>(10, 1.0), s),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)log_mgf_plain(std::vector<double>(10, 1.0), s), std::invalid_argument);
}

TEST_CASE("diffusivity fit recovers a synthetic random walk") {
  std::vector<double> checkpoints = {0.0, 1.0, 2.0, 3.0, 4.0};
  std::mt19937_64 rng(606060);
  std::vector<CohortResult> cohorts(8);
  for (auto& cohort : cohorts) {
    cohort.walkers.resize(400);
    for (WalkerPath& w : cohort.walkers) {
      std::array<long long, 3> pos{0, 0, 0};
      w.checkpoint_coords.push_back(pos);
      for (size_t k = 1; k < checkpoints.size(); ++k) {
        for (int a = 0; a < 3; ++a) pos[a] += (rng() & 1) ? 1 : -1;
        w.checkpoint_coords.push_back(pos);
      }
    }
  }
  SigmaEstimate est = estimate_sigma(cohorts, checkpoints);
  CHECK(est.positive_definite());
  CHECK_FALSE(est.window_warning);
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(est.matrix[a][a] - 1.0) <= 3.0 * est.std_errors[a][a]);
    for (int b = a + 1; b < 3; ++b)
      CHECK(std::abs(est.matrix[a][b]) <= 3.0 * est.std_errors[a][b] + 1e-12);
  }
  CHECK(est.fit_t0 == 0.0);
  CHECK(est.fit_t1 == 4.0);
}

TEST_CASE("diffusivity fit flags ballistic transport and bad input") {
  std::vector<double> checkpoints = {0.0, 1.0, 2.0, 3.0};
  std::mt19937_64 rng(616161);
  std::vector<CohortResult> cohorts(4);
  for (auto& cohort : cohorts) {
    cohort.walkers.resize(100);
    for (WalkerPath& w : cohort.walkers) {
      std::array<long long, 3> pos{0, 0, 0};
      w.checkpoint_coords.push_back(pos);
      for (int k = 1; k < 4; ++k) {
        pos[0] = k * k;  // deterministic ballistic axis
        pos[1] += (rng() & 1) ? 1 : -1;
        pos[2] += (rng() & 1) ? 1 : -1;
        w.checkpoint_coords.push_back(pos);
      }
    }
  }
  SigmaEstimate est = estimate_sigma(cohorts, checkpoints);
  // E[(X_t)_0^2] = t^4 is nowhere near a line through the origin.
  CHECK(est.window_warning);
  CHECK(est.nonlinearity > 0.05);

  CHECK_THROWS_AS((void)estimate_sigma(cohorts, {1.0, 2.0}), std::invalid_argument);
  std::vector<CohortResult> three(cohorts.begin(), cohorts.begin() + 3);
  CHECK_THROWS_AS((void)estimate_sigma(three, checkpoints), std::invalid_argument);
  std::vector<CohortResult> ragged = cohorts;
  ragged[0].walkers[0].checkpoint_coords.pop_back();
  CHECK_THROWS_AS((void)estimate_sigma(ragged, checkpoints), std::invalid_argument);
  std::vector<CohortResult> hollow = cohorts;
  hollow[1].walkers.clear();
  CHECK_THROWS_AS((void)estimate_sigma(hollow, checkpoints), std::invalid_argument);
}

TEST_CASE("closed-form soup mgf matches a dense resolvent") {
  Domain dom = Domain::centered(3, 5, Boundary::dirichlet);
  const long long vol = dom.volume();
  std::vector<double> v(vol, 0.0);
  v[dom.index_of({0, 0, 0})] = 0.04;
  v[dom.index_of({1, 0, 0})] = 0.03;
  const double u = 0.7;
  const double mass = 0.2;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(vol, vol);
  for (long long i = 0; i < vol; ++i) {
    A(i, i) = 6.0 + mass - v[i];
    for (const NeighborRef& nb : neighbors(dom, i))
      if (!nb.outside) A(i, nb.site) = -1.0;
  }
  Eigen::VectorXd rhs(vol);
  for (long long i = 0; i < vol; ++i) rhs(i) = v[i];
  Eigen::VectorXd gv = A.fullPivLu().solve(rhs);
  double quad = 0.0, total = 0.0;
  for (long long i = 0; i < vol; ++i) {
    quad += v[i] * gv(i);
    total += v[i];
  }
  const double expected = u * (quad + total);
  CHECK(soup_mgf_closed_form(dom, v, u, mass) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("field route reproduces the quadratic closed form") {
  Domain dom = Domain::centered(3, 5, Boundary::dirichlet);
  std::vector<double> v(dom.volume(), 0.0);
  v[dom.index_of({0, 0, 0})] = 0.04;
  v[dom.index_of({1, 0, 0})] = 0.03;
  const double u = 0.5;
  Potential pot = Potential::quadratic();

  ChainConfig chain;
  chain.kind = SamplerKind::heat_bath;
  chain.burn_in = 500;
  chain.thinning = 2;
  chain.n_samples = 20000;
  chain.seed = 717171;

  RouteEstimate field = route_field_mgf(dom, pot, v, u, chain);
  const double closed = soup_mgf_closed_form(dom, v, u, 0.0);
  CHECK(std::abs(field.log_value - closed) <= 4.0 * field.se + 5e-4);
  CHECK_FALSE(field.tail_warning);

  RouteEstimate off = route_field_mgf(dom, pot, v, 0.0, chain);
  CHECK(off.log_value == 0.0);
  CHECK(off.se == 0.0);

  CHECK_THROWS_AS((void)route_field_mgf(dom, pot, v, -1.0, chain), std::invalid_argument);
  CHECK_THROWS_AS((void)route_variance_integral(dom, pot, v, u, chain, 3),
                  std::invalid_argument);
}

TEST_CASE("soup route reproduces the quadratic closed form") {
  Domain box = Domain::centered(3, 9, Boundary::dirichlet);
  SoupConfig sc;
  sc.kill_box = box;
  sc.K = {box.index_of({0, 0, 0})};
  sc.u = 0.3;
  sc.seed = 727272;

  std::vector<double> v(box.volume(), 0.0);
  v[box.index_of({0, 0, 0})] = 0.2;

  RouteEstimate soup = route_soup_mgf(sc, v, 4000, 737373);
  const double closed = soup_mgf_closed_form(box, v, sc.u, 0.0);
  CHECK(closed > 0.0);
  CHECK(std::abs(soup.log_value - closed) <= std::max(4.0 * soup.se, 0.01));

  CHECK_THROWS_AS((void)route_soup_mgf(sc, std::vector<double>(5, 0.0), 4000, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)route_soup_mgf(sc, v, 10, 1), std::invalid_argument);
}

TEST_CASE("isomorphism residuals and the inconclusive flag") {
  RouteEstimate field;
  field.log_value = 1.0;
  field.se = 0.01;
  RouteEstimate variance = field;
  IsomorphismReport two = isomorphism_residual(field, variance, nullptr, nullptr);
  CHECK(two.resid_bc == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(two.err_bc == doctest::Approx(std::sqrt(2.0) * 0.01).epsilon(1e-12));
  CHECK_FALSE(two.has_soup);
  CHECK_FALSE(two.has_closed_form);
  CHECK_FALSE(two.inconclusive);

  RouteEstimate soup;
  soup.log_value = 1.02;
  soup.se = 0.02;
  const double closed = 0.99;
  IsomorphismReport full = isomorphism_residual(field, variance, &soup, &closed);
  CHECK(full.has_soup);
  CHECK(full.has_closed_form);
  CHECK(full.closed_form == 0.99);
  CHECK(full.resid_ab == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(full.err_ab == doctest::Approx(std::sqrt(0.02 * 0.02 + 0.01 * 0.01)).epsilon(1e-12));
  CHECK_FALSE(full.inconclusive);

  RouteEstimate wide = field;
  wide.se = 0.15;
  IsomorphismReport fuzzy = isomorphism_residual(wide, wide, nullptr, nullptr);
  CHECK(fuzzy.inconclusive);
}

TEST_CASE("ladder trends report gaps, ratios and extrapolation") {
  auto point = [](int N, double value) {
    LadderPoint p;
    p.N = N;
    p.value = value;
    p.target = 1.0;
    return p;
  };
  LadderReport good = ladder_trend({point(2, 1.5), point(4, 1.2), point(8, 1.1), point(16, 1.05)});
  CHECK(good.gaps_decreasing);
  CHECK(good.ratios_decreasing);
  CHECK(good.top_ratio == doctest::Approx(std::abs(1.05 / 1.1 - 1.0)).epsilon(1e-12));
  CHECK(good.extrapolated == doctest::Approx(1.0).epsilon(1e-12));

  LadderReport bad = ladder_trend({point(2, 1.5), point(4, 1.2), point(8, 1.3)});
  CHECK_FALSE(bad.gaps_decreasing);
  CHECK(bad.extrapolated == doctest::Approx(1.4).epsilon(1e-12));
}

TEST_CASE("wick variance oracle squares the cross term") {
  ContinuumModel model = occupation_side_model(16, -1.0, 1.0, 2.0);
  TestFunction v;
  v.L = 0.2;
  v.lambda = 0.01;
  v.center = {-0.5, 0.0, 0.0};
  TestFunction w = v;
  w.center = {0.5, 0.0, 0.0};

  // Same test function on both slots: the oracle is twice the squared
  // resolvent pairing computed by hand.
  std::vector<double> fv = model.sample_fn(v.fn());
  std::vector<double> gv = model.solve(fv);
  double cross = 0.0;
  for (size_t i = 0; i < fv.size(); ++i) cross += fv[i] * gv[i];
  cross *= model.h * model.h * model.h;
  CHECK(wick_variance_oracle(model, v.fn(), v.fn()) ==
        doctest::Approx(2.0 * cross * cross).epsilon(1e-12));

  // Separated supports: the pairing is controlled by the free-space kernel
  // bound at the support distance (closest points are 0.6 apart).
  const double vw = wick_variance_oracle(model, v.fn(), w.fn());
  CHECK(vw > 0.0);
  std::vector<double> fw = model.sample_fn(w.fn());
  double l1v = 0.0, l1w = 0.0;
  for (size_t i = 0; i < fv.size(); ++i) {
    l1v += std::abs(fv[i]);
    l1w += std::abs(fw[i]);
  }
  const double h3 = model.h * model.h * model.h;
  l1v *= h3;
  l1w *= h3;
  const double bound = l1v * l1w * kernel_decay_bound(1.0, 0.6);
  CHECK(vw <= 2.0 * bound * bound * 1.0001);
}

TEST_CASE("smoothed gaussian box geometry and discretization vectors") {
  SmoothedGaussianBox box(8, 16.0, 1.0);
  CHECK(box.dom.side[0] == 16);
  CHECK(box.dom.boundary == Boundary::periodic);
  CHECK(box.mass_lattice == doctest::Approx(0.25).epsilon(1e-14));

  MacroFn one = [](double, double, double) { return 1.0; };
  std::vector<double> qv = box.quadratic_vector(one);
  std::vector<double> lv = box.linear_vector(one);
  const double q_expected = 1.0 / (3.0 * 64.0);
  const double l_expected = rescale_factor(3, 8) / 512.0;
  CHECK(qv[0] == doctest::Approx(q_expected).epsilon(1e-12));
  CHECK(qv[qv.size() / 2] == doctest::Approx(q_expected).epsilon(1e-12));
  CHECK(lv[0] == doctest::Approx(l_expected).epsilon(1e-12));

  // Mollifier kernel: unit mass, reflection symmetry, delta at eps = 0.
  std::vector<double> eta = box.mollifier_kernel(0.4);
  double total = std::accumulate(eta.begin(), eta.end(), 0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(5e-3));
  for (double x : eta) CHECK(x >= 0.0);
  const long long n0 = box.dom.side[0];  // axis 0 is the fastest raw index
  for (long long k = 1; k <= 3; ++k)
    CHECK(eta[k] == doctest::Approx(eta[n0 - k]).epsilon(1e-9));

  std::vector<double> delta = box.mollifier_kernel(0.0);
  CHECK(delta[0] == 1.0);
  CHECK(std::accumulate(delta.begin(), delta.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("kernel smoothing lowers the peak and conserves mass") {
  SmoothedGaussianBox box(8, 16.0, 1.0);
  std::vector<double> eta = box.mollifier_kernel(0.4);
  std::vector<double> g0 = box.green_kernel(0, eta);
  std::vector<double> g1 = box.green_kernel(1, eta);
  std::vector<double> g2 = box.green_kernel(2, eta);
  CHECK(g1[0] < g0[0]);
  CHECK(g2[0] < g1[0]);

  // Circular convolution with eta multiplies the total mass by sum(eta).
  const double sum_eta = std::accumulate(eta.begin(), eta.end(), 0.0);
  const double sum_g0 = std::accumulate(g0.begin(), g0.end(), 0.0);
  const double sum_g1 = std::accumulate(g1.begin(), g1.end(), 0.0);
  CHECK(sum_g1 == doctest::Approx(sum_eta * sum_g0).epsilon(1e-9));

  TestFunction V;
  V.L = 0.45;
  V.lambda = 0.2;
  std::vector<double> a = box.quadratic_vector(V.fn());
  const double wick = box.wick_variance_exact(a);
  CHECK(wick > 0.0);
  const double gap = box.smoothing_gap_exact(a, eta);
  CHECK(gap > 0.0);
  CHECK(gap < wick);
  // A delta mollifier leaves the field unchanged: the gap collapses.
  const double gap0 = box.smoothing_gap_exact(a, box.mollifier_kernel(0.0));
  CHECK(std::abs(gap0) < 1e-9 * wick);
}

TEST_CASE("exact wick variance matches a monte carlo estimate") {
  SmoothedGaussianBox box(8, 16.0, 1.0);
  TestFunction V;
  V.L = 0.45;
  V.lambda = 0.2;
  std::vector<double> a = box.quadratic_vector(V.fn());
  const double exact = box.wick_variance_exact(a);

  std::mt19937_64 rng(818181);
  const int n = 4000;
  std::vector<double> series(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> phi = box.gauss.sample(rng);
    series[i] = quadratic_functional(a, phi);
  }
  Estimate var = variance_estimate(series);
  CHECK(std::abs(var.mean - exact) <= 4.0 * var.std_error);
}

TEST_CASE("smoothing gap monte carlo agrees with its oracle") {
  TestFunction V;
  V.L = 0.45;
  V.lambda = 0.2;
  L2ComparisonReport rep = l2_comparison_gaussian(8, 0.3, 16.0, V, 3000, 828282);
  CHECK(rep.oracle > 0.0);
  CHECK(rep.mc > 0.0);
  CHECK(std::abs(rep.mc - rep.oracle) <= 4.0 * rep.mc_se + 1e-12);
  CHECK_THROWS_AS((void)l2_comparison_gaussian(8, 0.3, 16.0, V, 100, 1), std::invalid_argument);
}

TEST_CASE("smoothed increments are gaussian and nearly quartic in the gap") {
  SmoothedGaussianBox box(8, 16.0, 1.0);
  std::vector<double> eta = box.mollifier_kernel(0.4);
  const long long c0 = box.dom.index_of({0, 0, 0});
  const long long c1 = box.dom.index_of({1, 0, 0});
  const long long c2 = box.dom.index_of({2, 0, 0});
  const long long c3 = box.dom.index_of({3, 0, 0});

  const double m1 = smoothed_increment_fourth_moment(box, eta, c1, c0);
  const double m2 = smoothed_increment_fourth_moment(box, eta, c2, c0);
  const double m3 = smoothed_increment_fourth_moment(box, eta, c3, c0);
  CHECK(m1 > 0.0);
  CHECK(m1 < m2);
  CHECK(m2 < m3);

  // Translation invariance on the torus.
  const long long d1 = box.dom.index_of({2, 1, 0});
  const long long d0 = box.dom.index_of({1, 1, 0});
  CHECK(smoothed_increment_fourth_moment(box, eta, d1, d0) ==
        doctest::Approx(m1).epsilon(1e-12));

  // The field is smooth at scale eps, so doubling a sub-eps gap multiplies
  // the fourth moment by nearly 2^4; lattice corrections pull it below 16.
  const double ratio = m2 / m1;
  CHECK(ratio > 6.0);
  CHECK(ratio < 17.0);
}

}  // TEST_SUITE
