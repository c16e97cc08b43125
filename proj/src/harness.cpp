#include "gibbs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gibbs/fourier.hpp"
#include "gibbs/green.hpp"
#include "gibbs/mollifier.hpp"
#include "gibbs/rng.hpp"

namespace gibbs {

double TestFunction::operator()(double x, double y, double z) const {
  const double dx = (x - center[0]) / L;
  const double dy = (y - center[1]) / L;
  const double dz = (z - center[2]) / L;
  const double r2 = dx * dx + dy * dy + dz * dz;
  if (r2 >= 1.0) return 0.0;
  return lambda / (L * L) * std::exp(1.0 - 1.0 / (1.0 - r2));
}

MacroFn TestFunction::fn() const {
  TestFunction copy = *this;
  return [copy](double x, double y, double z) { return copy(x, y, z); };
}

double rescale_factor(int dim, int N) {
  return std::pow(static_cast<double>(N), 0.5 * dim - 1.0) / std::sqrt(static_cast<double>(dim));
}

double rescale_field(const Domain& dom, const std::vector<double>& phi, int N,
                     const std::array<double, 3>& z) {
  Coord cell = cell_of({z[0], z[1], z[2]}, N);
  if (!dom.contains(cell)) {
    if (dom.boundary == Boundary::dirichlet) return 0.0;
    cell = dom.normalize(cell);
  }
  return rescale_factor(dom.dim, N) * phi[dom.index_of(cell)];
}

double quadratic_functional(const std::vector<double>& v_lat, const std::vector<double>& phi) {
  if (v_lat.size() != phi.size()) throw std::invalid_argument("quadratic_functional: size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < phi.size(); ++i) acc += v_lat[i] * phi[i] * phi[i];
  return acc;
}

double linear_functional(const std::vector<double>& v_lat, const std::vector<double>& phi) {
  if (v_lat.size() != phi.size()) throw std::invalid_argument("linear_functional: size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < phi.size(); ++i) acc += v_lat[i] * phi[i];
  return acc;
}

WickReport wick_functional(const std::vector<double>& raw_series, double mgf_lambda) {
  const size_t n = raw_series.size();
  if (n < 64) throw std::invalid_argument("wick_functional: too few samples");
  WickReport rep;
  rep.mgf_lambda = mgf_lambda;

  const double mean = std::accumulate(raw_series.begin(), raw_series.end(), 0.0) / n;

  // Split-half centering check: the second half centered with the first-half
  // mean should average to 0 within error.
  const size_t half = n / 2;
  double m1 = 0.0;
  for (size_t i = 0; i < half; ++i) m1 += raw_series[i];
  m1 /= half;
  std::vector<double> second(raw_series.begin() + half, raw_series.end());
  for (double& x : second) x -= m1;
  Estimate split = batch_means(second);
  rep.split_mean = split.mean;
  rep.split_mean_se = split.std_error;

  Estimate var = variance_estimate(raw_series);
  rep.variance = var.mean;
  rep.variance_se = var.std_error;
  rep.n_eff = var.n_eff;

  std::vector<double> weights(n);
  for (size_t i = 0; i < n; ++i) weights[i] = std::exp(mgf_lambda * (raw_series[i] - mean));
  Estimate lm = log_mean_estimate(weights);
  rep.mgf_log = lm.mean;
  rep.mgf_log_se = lm.std_error;
  rep.top1_share = top_share(weights, 0.01);
  rep.tail_warning = rep.top1_share > 0.5;
  return rep;
}

ThetaReport theta_functional(const std::vector<double>& quad_series,
                             const std::vector<double>& lin_series, double a, double b) {
  if (quad_series.size() != lin_series.size())
    throw std::invalid_argument("theta_functional: paired series differ in length");
  const size_t n = quad_series.size();
  if (n < 64) throw std::invalid_argument("theta_functional: too few samples");
  const double mean = std::accumulate(quad_series.begin(), quad_series.end(), 0.0) / n;
  std::vector<double> weights(n);
  for (size_t i = 0; i < n; ++i)
    weights[i] = std::exp(a * (quad_series[i] - mean) + b * lin_series[i]);
  Estimate lm = log_mean_estimate(weights);
  ThetaReport rep;
  rep.log_value = lm.mean;
  rep.se = lm.std_error;
  rep.n_eff = lm.n_eff;
  rep.top1_share = top_share(weights, 0.01);
  rep.tail_warning = rep.top1_share > 0.5;
  return rep;
}

ThetaReport log_mgf_antithetic(const std::vector<double>& series, double s) {
  const size_t n = series.size();
  if (n < 64) throw std::invalid_argument("log_mgf_antithetic: too few samples");
  std::vector<double> weights(n);
  for (size_t i = 0; i < n; ++i) weights[i] = std::cosh(s * series[i]);
  Estimate lm = log_mean_estimate(weights);
  ThetaReport rep;
  rep.log_value = lm.mean;
  rep.se = lm.std_error;
  rep.n_eff = lm.n_eff;
  rep.top1_share = top_share(weights, 0.01);
  rep.tail_warning = rep.top1_share > 0.5;
  return rep;
}

ThetaReport log_mgf_plain(const std::vector<double>& series, double s) {
  const size_t n = series.size();
  if (n < 64) throw std::invalid_argument("log_mgf_plain: too few samples");
  std::vector<double> weights(n);
  for (size_t i = 0; i < n; ++i) weights[i] = std::exp(s * series[i]);
  Estimate lm = log_mean_estimate(weights);
  ThetaReport rep;
  rep.log_value = lm.mean;
  rep.se = lm.std_error;
  rep.n_eff = lm.n_eff;
  rep.top1_share = top_share(weights, 0.01);
  rep.tail_warning = rep.top1_share > 0.5;
  return rep;
}

// ---------------------------------------------------------------------------
// Diffusivity fits.
// ---------------------------------------------------------------------------

bool SigmaEstimate::positive_definite() const {
  // Cholesky by hand on the 3x3 matrix.
  double a[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a[i][j] = 0.5 * (matrix[i][j] + matrix[j][i]);
  for (int k = 0; k < 3; ++k) {
    double d = a[k][k];
    for (int j = 0; j < k; ++j) d -= a[k][j] * a[k][j];
    if (d <= 0.0) return false;
    a[k][k] = std::sqrt(d);
    for (int i = k + 1; i < 3; ++i) {
      double s = a[i][k];
      for (int j = 0; j < k; ++j) s -= a[i][j] * a[k][j];
      a[i][k] = s / a[k][k];
    }
  }
  return true;
}

SigmaEstimate estimate_sigma(const std::vector<CohortResult>& cohorts,
                             const std::vector<double>& checkpoints) {
  const size_t n_t = checkpoints.size();
  if (n_t < 2) throw std::invalid_argument("estimate_sigma: need at least two checkpoints");
  if (cohorts.size() < 4) throw std::invalid_argument("estimate_sigma: need at least 4 cohorts");

  // Displacements are taken relative to the t = 0 checkpoint, so every walker
  // carries its own origin and the domain is not needed here.
  if (checkpoints[0] != 0.0)
    throw std::invalid_argument("estimate_sigma: first checkpoint must be t = 0");

  double sum_t2 = 0.0;
  for (double t : checkpoints) sum_t2 += t * t;

  // Per-cohort slope of the (a,b) second moment versus t, fit through the
  // origin; cohorts are independent so errors come from their spread.
  const size_t n_c = cohorts.size();
  std::vector<std::array<double, 9>> slopes(n_c);

  // Pooled moments per checkpoint for the nonlinearity diagnostic.
  std::vector<std::array<double, 3>> pooled(n_t, {0.0, 0.0, 0.0});
  long long pooled_walkers = 0;

  for (size_t c = 0; c < n_c; ++c) {
    const auto& walkers = cohorts[c].walkers;
    if (walkers.empty()) throw std::invalid_argument("estimate_sigma: empty cohort");
    std::vector<std::array<double, 9>> m(n_t, {0, 0, 0, 0, 0, 0, 0, 0, 0});
    for (const WalkerPath& w : walkers) {
      if (w.checkpoint_coords.size() != n_t)
        throw std::invalid_argument("estimate_sigma: checkpoint count mismatch");
      const auto& cp = w.checkpoint_coords;
      for (size_t k = 0; k < n_t; ++k) {
        double d[3];
        for (int a = 0; a < 3; ++a) d[a] = static_cast<double>(cp[k][a] - cp[0][a]);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) m[k][3 * a + b] += d[a] * d[b];
      }
    }
    const double inv_w = 1.0 / static_cast<double>(walkers.size());
    for (size_t k = 0; k < n_t; ++k)
      for (int e = 0; e < 9; ++e) m[k][e] *= inv_w;

    for (int e = 0; e < 9; ++e) {
      double num = 0.0;
      for (size_t k = 0; k < n_t; ++k) num += m[k][e] * checkpoints[k];
      slopes[c][e] = num / sum_t2;
    }
    for (size_t k = 0; k < n_t; ++k)
      for (int a = 0; a < 3; ++a) pooled[k][a] += m[k][3 * a + a] * walkers.size();
    pooled_walkers += static_cast<long long>(walkers.size());
  }

  SigmaEstimate est;
  est.fit_t0 = checkpoints.front();
  est.fit_t1 = checkpoints.back();
  for (int e = 0; e < 9; ++e) {
    double mean = 0.0;
    for (size_t c = 0; c < n_c; ++c) mean += slopes[c][e];
    mean /= n_c;
    double var = 0.0;
    for (size_t c = 0; c < n_c; ++c) var += (slopes[c][e] - mean) * (slopes[c][e] - mean);
    var /= (n_c - 1.0) * n_c;
    est.matrix[e / 3][e % 3] = mean;
    est.std_errors[e / 3][e % 3] = std::sqrt(var);
  }

  // Nonlinearity of the pooled diagonal moments against the fitted line.
  double worst = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double slope = est.matrix[a][a];
    if (slope <= 0.0) continue;
    const double scale = slope * checkpoints.back();
    for (size_t k = 1; k < n_t; ++k) {
      const double mk = pooled[k][a] / pooled_walkers;
      worst = std::max(worst, std::abs(mk - slope * checkpoints[k]) / scale);
    }
  }
  est.nonlinearity = worst;
  est.window_warning = worst > 0.05;
  return est;
}

// ---------------------------------------------------------------------------
// Isomorphism routes.
// ---------------------------------------------------------------------------

RouteEstimate route_soup_mgf(const SoupConfig& cfg, const std::vector<double>& v,
                             long long n_soups, uint64_t seed, const Potential* pot) {
  if (static_cast<long long>(v.size()) != cfg.kill_box.volume())
    throw std::invalid_argument("route_soup_mgf: v must live on the kill box");
  if (n_soups < 64) throw std::invalid_argument("route_soup_mgf: too few soups");

  std::vector<double> weights;
  weights.reserve(n_soups);
  std::mt19937_64 rng = substream(seed, 0x50c9u);

  auto accumulate = [&](const SoupSample& s) {
    double x = 0.0;
    for (const TrajectoryPair& tp : s.trajectories) {
      for (const auto& [site, time] : tp.forward.occupation) x += v[site] * time;
      for (const auto& [site, time] : tp.backward.occupation) x += v[site] * time;
    }
    weights.push_back(std::exp(x));
  };

  if (pot == nullptr || pot->kind == PotentialKind::quadratic) {
    GaussianSoupSampler sampler(cfg);
    for (long long i = 0; i < n_soups; ++i) accumulate(sampler.sample(rng));
  } else {
    GeneralSoupSampler sampler(cfg, *pot);
    for (long long i = 0; i < n_soups; ++i) accumulate(sampler.sample(rng));
  }

  Estimate lm = log_mean_estimate(weights);
  RouteEstimate r;
  r.log_value = lm.mean;
  r.se = lm.std_error;
  r.n_eff = lm.n_eff;
  r.top1_share = top_share(weights, 0.01);
  r.tail_warning = r.top1_share > 0.5;
  return r;
}

RouteEstimate route_field_mgf(const Domain& dom, const Potential& pot,
                              const std::vector<double>& v, double u, ChainConfig chain) {
  RouteEstimate r;
  if (u < 0.0) throw std::invalid_argument("route_field_mgf: u must be >= 0");
  const double v_total = std::accumulate(v.begin(), v.end(), 0.0);
  if (u == 0.0) {
    r.log_value = 0.0;
    r.se = 0.0;
    return r;
  }
  const double s = std::sqrt(2.0 * u);
  TiltSpec tilt;
  tilt.V = v;
  std::vector<double> series =
      run_chain_observables(dom, pot, tilt, chain,
                            {[&v](const std::vector<double>& phi) {
                              return linear_functional(v, phi);
                            }})[0];
  // The tilted measure with h = 0 and even U is phi -> -phi symmetric, so the
  // antithetic cosh estimator has the same mean with far smaller variance.
  ThetaReport mgf = log_mgf_antithetic(series, s);
  r.log_value = u * v_total + mgf.log_value;
  r.se = mgf.se;
  r.n_eff = mgf.n_eff;
  r.top1_share = mgf.top1_share;
  r.tail_warning = mgf.tail_warning;
  return r;
}

RouteEstimate route_variance_integral(const Domain& dom, const Potential& pot,
                                      const std::vector<double>& v, double u, ChainConfig chain,
                                      int n_nodes) {
  RouteEstimate r;
  if (u == 0.0) return r;
  if (n_nodes < 2 || n_nodes % 2 != 0)
    throw std::invalid_argument("route_variance_integral: n_nodes must be even and >= 2");
  const double smax = std::sqrt(2.0 * u);
  const double hstep = smax / n_nodes;
  const double v_total = std::accumulate(v.begin(), v.end(), 0.0);

  double integral = 0.0;
  double var_acc = 0.0;
  for (int i = 0; i <= n_nodes; ++i) {
    const double s = smax * i / n_nodes;
    const double factor = smax - s;
    if (factor == 0.0) continue;  // right endpoint carries weight zero
    double w = (i == 0) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    w *= hstep / 3.0;
    TiltSpec tilt;
    tilt.V = v;
    tilt.h.assign(v.size(), 0.0);
    for (size_t x = 0; x < v.size(); ++x) tilt.h[x] = s * v[x];
    ChainConfig node_chain = chain;
    node_chain.seed = substream_seed(chain.seed, 0x7a51u, static_cast<uint64_t>(i));
    std::vector<double> series =
        run_chain_observables(dom, pot, tilt, node_chain,
                              {[&v](const std::vector<double>& phi) {
                                return linear_functional(v, phi);
                              }})[0];
    Estimate var = variance_estimate(series);
    integral += w * factor * var.mean;
    var_acc += (w * factor) * (w * factor) * var.std_error * var.std_error;
  }
  r.log_value = u * v_total + integral;
  r.se = std::sqrt(var_acc);
  return r;
}

double soup_mgf_closed_form(const Domain& dom, const std::vector<double>& v, double u,
                            double mass) {
  LatticeGreen g = green_solve(dom, v, mass);
  std::vector<double> gv = g.solve(v);
  double quad = 0.0, total = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    quad += v[i] * gv[i];
    total += v[i];
  }
  return u * (quad + total);
}

IsomorphismReport isomorphism_residual(const RouteEstimate& field, const RouteEstimate& variance,
                                       const RouteEstimate* soup, const double* closed_form) {
  IsomorphismReport rep;
  rep.field = field;
  rep.variance = variance;
  rep.resid_bc = field.log_value - variance.log_value;
  rep.err_bc = std::sqrt(field.se * field.se + variance.se * variance.se);
  double scale_bc = std::max(std::abs(field.log_value), std::abs(variance.log_value));
  if (scale_bc > 0.0 && rep.err_bc > 0.2 * scale_bc) rep.inconclusive = true;
  if (soup != nullptr) {
    rep.soup = *soup;
    rep.has_soup = true;
    rep.resid_ab = soup->log_value - field.log_value;
    rep.err_ab = std::sqrt(soup->se * soup->se + field.se * field.se);
    double scale_ab = std::max(std::abs(soup->log_value), std::abs(field.log_value));
    if (scale_ab > 0.0 && rep.err_ab > 0.2 * scale_ab) rep.inconclusive = true;
  }
  if (closed_form != nullptr) {
    rep.closed_form = *closed_form;
    rep.has_closed_form = true;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Ladders.
// ---------------------------------------------------------------------------

LadderReport ladder_trend(std::vector<LadderPoint> points) {
  LadderReport rep;
  rep.points = std::move(points);
  const size_t n = rep.points.size();
  if (n >= 2) {
    rep.gaps_decreasing = true;
    for (size_t i = 1; i < n; ++i) {
      const double g0 = std::abs(rep.points[i - 1].value - rep.points[i - 1].target);
      const double g1 = std::abs(rep.points[i].value - rep.points[i].target);
      if (g1 >= g0) rep.gaps_decreasing = false;
    }
    std::vector<double> ratios;
    for (size_t i = 1; i < n; ++i) {
      if (rep.points[i - 1].value != 0.0)
        ratios.push_back(std::abs(rep.points[i].value / rep.points[i - 1].value - 1.0));
    }
    rep.ratios_decreasing = ratios.size() >= 2;
    for (size_t i = 1; i < ratios.size(); ++i)
      if (ratios[i] >= ratios[i - 1]) rep.ratios_decreasing = false;
    if (!ratios.empty()) rep.top_ratio = ratios.back();
    rep.extrapolated = 2.0 * rep.points[n - 1].value - rep.points[n - 2].value;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Continuum references.
// ---------------------------------------------------------------------------

ContinuumModel occupation_side_model(int n, double lo, double hi, double sigma2) {
  return ContinuumModel(n, lo, hi, 0.5 * sigma2, 0.0, Boundary::dirichlet);
}

ContinuumModel field_side_model(int n, double lo, double hi, double sigma2) {
  return ContinuumModel(n, lo, hi, 1.5 * sigma2, 0.0, Boundary::dirichlet);
}

double kernel_decay_bound(double scale, double distance) {
  if (scale <= 0.0 || distance <= 0.0)
    throw std::invalid_argument("kernel_decay_bound: scale and distance must be positive");
  constexpr double pi = 3.14159265358979323846;
  return 1.0 / (4.0 * pi * scale * distance);
}

double wick_variance_oracle(ContinuumModel& model, const MacroFn& v, const MacroFn& w) {
  model.W.clear();  // the covariance kernel is the untilted one
  std::vector<double> fv = model.sample_fn(v);
  std::vector<double> fw = model.sample_fn(w);
  std::vector<double> gw = model.solve(fw);
  double cross = 0.0;
  for (size_t i = 0; i < fv.size(); ++i) cross += fv[i] * gw[i];
  cross *= model.h * model.h * model.h;
  return 2.0 * cross * cross;
}

// ---------------------------------------------------------------------------
// Smoothed periodic Gaussian machinery.
// ---------------------------------------------------------------------------

namespace {

long long displacement_index(const Domain& dom, const Coord& delta) {
  long long idx = 0;
  long long stride = 1;
  for (int a = 0; a < dom.dim; ++a) {
    const int n = dom.side[a];
    int r = delta[a] % n;
    if (r < 0) r += n;
    idx += stride * r;
    stride *= n;
  }
  return idx;
}

}  // namespace

namespace {

int smoothed_box_side(int N, double extent) {
  const int side = static_cast<int>(std::lround(2.0 * extent * N));
  if (side < 4) throw std::invalid_argument("SmoothedGaussianBox: box side too small");
  return side;
}

}  // namespace

SmoothedGaussianBox::SmoothedGaussianBox(int N_, double eps0, double extent)
    : N(N_),
      mass_lattice(eps0 / (static_cast<double>(N_) * N_)),
      dom(Domain::centered(3, smoothed_box_side(N_, extent), Boundary::periodic)),
      gauss(dom, eps0 / (static_cast<double>(N_) * N_)) {
  if (N_ < 2) throw std::invalid_argument("SmoothedGaussianBox: N must be >= 2");
  if (eps0 <= 0.0) throw std::invalid_argument("SmoothedGaussianBox: eps0 must be > 0");
}

std::vector<double> SmoothedGaussianBox::quadratic_vector(const MacroFn& v) const {
  const long long vol = dom.volume();
  std::vector<double> out(vol, 0.0);
  const double scale = 1.0 / (3.0 * N * N);
  for (long long i = 0; i < vol; ++i) {
    Coord c = dom.coord_of(i);
    out[i] = scale * cell_average(v, c, N);
  }
  return out;
}

std::vector<double> SmoothedGaussianBox::linear_vector(const MacroFn& w) const {
  const long long vol = dom.volume();
  std::vector<double> out(vol, 0.0);
  const double scale = rescale_factor(3, N) / (static_cast<double>(N) * N * N);
  for (long long i = 0; i < vol; ++i) {
    Coord c = dom.coord_of(i);
    out[i] = scale * cell_average(w, c, N);
  }
  return out;
}

std::vector<double> SmoothedGaussianBox::mollifier_kernel(double eps) const {
  const long long vol = dom.volume();
  std::vector<double> eta(vol, 0.0);
  if (eps == 0.0) {
    eta[displacement_index(dom, Coord{0, 0, 0})] = 1.0;
    return eta;
  }
  const double half_cell = 0.5 / N;
  MollifierWeights w = mollifier_weights(dom, N, eps, {half_cell, half_cell, half_cell});
  const double cell_volume = 1.0 / (static_cast<double>(N) * N * N);
  for (size_t k = 0; k < w.sites.size(); ++k) {
    Coord c = dom.coord_of(w.sites[k]);
    eta[displacement_index(dom, c)] += w.weights[k] * cell_volume;
  }
  return eta;
}

std::vector<double> SmoothedGaussianBox::green_kernel(int smooth_sides,
                                                      const std::vector<double>& eta) const {
  std::vector<double> col = gauss.kernel_column(1);
  for (int s = 0; s < smooth_sides; ++s) col = gauss.convolve(eta, col);
  return col;
}

double SmoothedGaussianBox::wick_variance_exact(const std::vector<double>& a) const {
  return 2.0 * gauss.pair_form_squared_kernel(a, a, gauss.kernel_column(1));
}

double SmoothedGaussianBox::smoothing_gap_exact(const std::vector<double>& a,
                                                const std::vector<double>& eta) const {
  const std::vector<double> g0 = green_kernel(0, eta);
  const std::vector<double> g1 = green_kernel(1, eta);
  const std::vector<double> g2 = green_kernel(2, eta);
  const double s0 = gauss.pair_form_squared_kernel(a, a, g0);
  const double s1 = gauss.pair_form_squared_kernel(a, a, g1);
  const double s2 = gauss.pair_form_squared_kernel(a, a, g2);
  return 2.0 * (s0 - 2.0 * s1 + s2);
}

L2ComparisonReport l2_comparison_gaussian(int N, double eps, double eps0, const TestFunction& V,
                                          long long n_samples, uint64_t seed) {
  if (n_samples < 256) throw std::invalid_argument("l2_comparison_gaussian: too few samples");
  SmoothedGaussianBox box(N, eps0);
  const std::vector<double> a = box.quadratic_vector(V.fn());
  const std::vector<double> eta = box.mollifier_kernel(eps);

  std::mt19937_64 rng = substream(seed, 0x12e5u);
  std::vector<double> gap(n_samples);
  for (long long i = 0; i < n_samples; ++i) {
    std::vector<double> phi = box.gauss.sample(rng);
    std::vector<double> psi = box.gauss.convolve(eta, phi);
    double f = 0.0;
    for (size_t x = 0; x < phi.size(); ++x) f += a[x] * (phi[x] * phi[x] - psi[x] * psi[x]);
    gap[i] = f;
  }
  Estimate var = variance_estimate(gap);
  L2ComparisonReport rep;
  rep.mc = std::sqrt(std::max(var.mean, 0.0));
  rep.mc_se = rep.mc > 0.0 ? var.std_error / (2.0 * rep.mc) : var.std_error;
  rep.oracle = std::sqrt(std::max(box.smoothing_gap_exact(a, eta), 0.0));
  return rep;
}

double smoothed_increment_fourth_moment(const SmoothedGaussianBox& box,
                                        const std::vector<double>& eta, long long cell_z,
                                        long long cell_w) {
  std::vector<double> k2 = box.green_kernel(2, eta);
  Coord cz = box.dom.coord_of(cell_z);
  Coord cw = box.dom.coord_of(cell_w);
  Coord delta(3);
  for (int a = 0; a < 3; ++a) delta[a] = cz[a] - cw[a];
  const double factor = rescale_factor(3, box.N);
  const double var =
      2.0 * factor * factor * (k2[displacement_index(box.dom, Coord{0, 0, 0})] -
                               k2[displacement_index(box.dom, delta)]);
  return 3.0 * var * var;
}

}  // namespace gibbs
