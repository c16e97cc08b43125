#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gibbs/continuum.hpp"
#include "gibbs/field.hpp"
#include "gibbs/fourier.hpp"
#include "gibbs/lattice.hpp"
#include "gibbs/potential.hpp"
#include "gibbs/soup.hpp"
#include "gibbs/stats.hpp"
#include "gibbs/walk.hpp"

namespace gibbs {

// Smooth compactly supported test function: a bump of radius L and amplitude
// lambda / L^2, so that sup|V| * diam(supp V)^2 = 4 * lambda independently of L.
struct TestFunction {
  double L = 0.5;
  double lambda = 0.01;
  std::array<double, 3> center{0.0, 0.0, 0.0};

  double operator()(double x, double y, double z) const;
  MacroFn fn() const;
  double sup_norm() const { return lambda / (L * L); }
  // sup|V| * (euclidean diameter of support)^2, the quantity capped by the
  // smallness threshold.
  double smallness_product() const { return 4.0 * lambda; }
};

// Scale factor d^{-1/2} N^{d/2-1} applied to lattice fields when mapped to
// macroscopic coordinates.
double rescale_factor(int dim, int N);

// Value of the rescaled field at macroscopic point z (cell-wise constant).
double rescale_field(const Domain& dom, const std::vector<double>& phi, int N,
                     const std::array<double, 3>& z);

// ---------------------------------------------------------------------------
// Wick-square and exponential functionals of the rescaled field.
// ---------------------------------------------------------------------------

// Per-sample quadratic functional sum_x v_lat[x] phi[x]^2; all rescaling
// factors live in v_lat (see SmoothedGaussianBox::quadratic_vector).
double quadratic_functional(const std::vector<double>& v_lat, const std::vector<double>& phi);

double linear_functional(const std::vector<double>& v_lat, const std::vector<double>& phi);

struct WickReport {
  // Mean of the centered series on the second half, centered with the
  // first-half mean: an honest "is the centering consistent" statistic.
  double split_mean = 0.0;
  double split_mean_se = 0.0;
  // Variance of the (fully centered) series with batch-jackknife error.
  double variance = 0.0;
  double variance_se = 0.0;
  double n_eff = 0.0;
  // log E[exp(lambda * (X - mean X))] by delete-one-batch jackknife.
  double mgf_lambda = 0.0;
  double mgf_log = 0.0;
  double mgf_log_se = 0.0;
  // Heavy-tail diagnostic: share of the exponential mass carried by the top
  // percentile of samples.
  double top1_share = 0.0;
  bool tail_warning = false;
};

WickReport wick_functional(const std::vector<double>& raw_series, double mgf_lambda);

struct ThetaReport {
  double log_value = 0.0;
  double se = 0.0;
  double top1_share = 0.0;
  bool tail_warning = false;
  double n_eff = 0.0;
};

// log E[exp(a*(X - mean X) + b*Y)] over paired series (X quadratic, Y linear).
ThetaReport theta_functional(const std::vector<double>& quad_series,
                             const std::vector<double>& lin_series, double a, double b);

// log E[cosh(s * X)] with jackknife error: the antithetic estimator of
// log E[exp(s X)] for sign-symmetric X.
ThetaReport log_mgf_antithetic(const std::vector<double>& series, double s);

// log E[exp(s * X)] without symmetrization.
ThetaReport log_mgf_plain(const std::vector<double>& series, double s);

// ---------------------------------------------------------------------------
// Effective diffusivity from walker cohorts.
// ---------------------------------------------------------------------------

struct SigmaEstimate {
  std::array<std::array<double, 3>, 3> matrix{};
  std::array<std::array<double, 3>, 3> std_errors{};
  double fit_t0 = 0.0;
  double fit_t1 = 0.0;
  // Largest relative deviation of the measured second moments from the
  // straight-line fit; > 5 % suggests the fit window is outside the linear
  // regime.
  double nonlinearity = 0.0;
  bool window_warning = false;

  bool positive_definite() const;
};

// Fits E[(X_t - X_0)_a (X_t - X_0)_b] = Sigma_ab * t across checkpoint times,
// with cohort-level resampling for errors (walkers inside a cohort share an
// environment and are not independent).
SigmaEstimate estimate_sigma(const std::vector<CohortResult>& cohorts,
                             const std::vector<double>& checkpoints);

// ---------------------------------------------------------------------------
// Isomorphism routes.
// ---------------------------------------------------------------------------

struct RouteEstimate {
  double log_value = 0.0;
  double se = 0.0;  // standard error on the log scale
  double n_eff = 0.0;
  double top1_share = 0.0;
  bool tail_warning = false;
};

// Route (a): soup occupation MGF, log E[exp(<v, L>)], from soup samples.
// pot = nullptr selects the quadratic-potential sampler.
RouteEstimate route_soup_mgf(const SoupConfig& cfg, const std::vector<double>& v,
                             long long n_soups, uint64_t seed, const Potential* pot = nullptr);

// Route (b): u<v,1> + log E_{mu_V}[exp(sqrt(2u) <v, phi>)], with antithetic
// symmetrization of the exponential.
RouteEstimate route_field_mgf(const Domain& dom, const Potential& pot,
                              const std::vector<double>& v, double u, ChainConfig chain);

// Route (c): u<v,1> + integral_0^{sqrt(2u)} (sqrt(2u) - s) var_{mu_{sv,v}}(<v,phi>) ds
// by Simpson quadrature over tilted chains (warm-started along the s-grid).
RouteEstimate route_variance_integral(const Domain& dom, const Potential& pot,
                                      const std::vector<double>& v, double u, ChainConfig chain,
                                      int n_nodes);

// Closed form for the quadratic potential: u <v, (I - G V)^{-1} 1>_V-weighted,
// computed from the tilted Green operator: u * <v, G^V v + 1> with the
// convention that <v, G^V v> uses the occupation-time kernel.
double soup_mgf_closed_form(const Domain& dom, const std::vector<double>& v, double u,
                            double mass = 0.0);

struct IsomorphismReport {
  RouteEstimate soup;       // route (a), optional
  RouteEstimate field;      // route (b)
  RouteEstimate variance;   // route (c)
  bool has_soup = false;
  double closed_form = 0.0;  // quadratic-potential closed form, 0 if unused
  bool has_closed_form = false;
  // Pairwise residuals on the log scale and their combined errors.
  double resid_ab = 0.0, err_ab = 0.0;
  double resid_bc = 0.0, err_bc = 0.0;
  bool inconclusive = false;  // error bars exceed 20 % of the compared values
};

IsomorphismReport isomorphism_residual(const RouteEstimate& field, const RouteEstimate& variance,
                                       const RouteEstimate* soup, const double* closed_form);

// ---------------------------------------------------------------------------
// Ladder trends.
// ---------------------------------------------------------------------------

struct LadderPoint {
  int N = 0;
  double value = 0.0;
  double se = 0.0;
  double target = 0.0;  // deterministic reference for this rung, if any
};

struct LadderReport {
  std::vector<LadderPoint> points;
  bool gaps_decreasing = false;   // |value - target| decreasing along the ladder
  bool ratios_decreasing = false; // |value(2N)/value(N) - 1| decreasing
  double top_ratio = 0.0;         // last successive-ratio deviation
  double extrapolated = 0.0;      // Richardson extrapolation of the last rungs
};

LadderReport ladder_trend(std::vector<LadderPoint> points);

// ---------------------------------------------------------------------------
// Deterministic continuum references.
// ---------------------------------------------------------------------------

// Builds the continuum model for the occupation-side operator
// -(sigma2/2) Lap - V on [lo,hi]^3 with Dirichlet boundary.
ContinuumModel occupation_side_model(int n, double lo, double hi, double sigma2);

// Field-side operator -(d sigma2 / 2) Lap - W.
ContinuumModel field_side_model(int n, double lo, double hi, double sigma2);

// Separated-support decay estimate for the kernel of (-s Lap)^{-1}:
// kappa / (s' * r) with kappa = 1/(4 pi) per unit scale.
double kernel_decay_bound(double scale, double distance);

// 2 * (integral V G_Sigma W)^2: the Wick-square covariance oracle.
double wick_variance_oracle(ContinuumModel& model, const MacroFn& v, const MacroFn& w);

// ---------------------------------------------------------------------------
// Smoothed-field machinery on periodic Gaussian boxes.
// ---------------------------------------------------------------------------

struct SmoothedGaussianBox {
  // Periodic box representing [-extent, extent]^3 at lattice scale N (side
  // 2 extent N), with macroscopic mass eps0 (lattice mass eps0 / N^2).
  SmoothedGaussianBox(int N, double eps0, double extent = 1.0);

  int N;
  double mass_lattice;
  Domain dom;
  PeriodicGaussian gauss;

  // Lattice test vector (1/d) * N^{-2} * cell-average of V, so that
  // <vec, phi^2> is the cell-center quadrature of integral V phi_N^2 dz.
  std::vector<double> quadratic_vector(const MacroFn& v) const;
  // Lattice test vector for <Phi_N, W>: rescale * N^{-3} * cell-average of W.
  std::vector<double> linear_vector(const MacroFn& w) const;

  // Convolution weights of the mollifier at scale eps evaluated on cell
  // centers (sums to 1); eps = 0 gives a delta at the origin.
  std::vector<double> mollifier_kernel(double eps) const;

  // Occupation-convention Green kernel column (power 1), optionally smoothed
  // on one or both sides by the given mollifier kernel.
  std::vector<double> green_kernel(int smooth_sides, const std::vector<double>& eta) const;

  // Exact var(<a, phi^2>) = 2 sum a_x g(x-y)^2 a_y for centered Gaussian phi.
  double wick_variance_exact(const std::vector<double>& a) const;

  // Exact var of <a, phi^2 - psi^2> where psi = eta * phi:
  // 2 sum a [g^2 - 2 (eta*g)^2 + (eta*eta*g)^2] a.
  double smoothing_gap_exact(const std::vector<double>& a, const std::vector<double>& eta) const;
};

struct L2ComparisonReport {
  double mc = 0.0;       // sqrt of the MC variance of the gap functional
  double mc_se = 0.0;
  double oracle = 0.0;   // sqrt of the exact Gaussian variance
};

L2ComparisonReport l2_comparison_gaussian(int N, double eps, double eps0, const TestFunction& V,
                                          long long n_samples, uint64_t seed);

// E|phi^eps(z) - phi^eps(w)|^4 for the periodic Gaussian box: 3 * (second
// moment)^2 with the second moment computed exactly from the smoothed kernel.
double smoothed_increment_fourth_moment(const SmoothedGaussianBox& box,
                                        const std::vector<double>& eta, long long cell_z,
                                        long long cell_w);

}  // namespace gibbs
