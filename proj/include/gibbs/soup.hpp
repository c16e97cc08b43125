#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "gibbs/field.hpp"
#include "gibbs/green.hpp"
#include "gibbs/lattice.hpp"
#include "gibbs/potential.hpp"
#include "gibbs/walk.hpp"

namespace gibbs {

struct SoupConfig {
  double u = 0.1;  // level
  TiltSpec tilt;   // linear and quadratic tilt with h identical to V
  std::vector<long long> K;
  Domain kill_box;  // Dirichlet box the walks die on
  double horizon = 1e9;
  uint64_t seed = 1;
  int max_rejection = 20000;

  // Estimator controls for the general-environment sampler.
  int sigma_nodes = 16;
  long long capacity_fields = 32;  // fields per node for the normalizer
  long long escape_walks = 256;    // walks per escape-rate estimate
  long long field_burn_in = 1500;
  double field_dt = 0.02;
  double sub_dt = 0.02;

  void validate(const Domain& dom) const;  // throws on violated invariants
};

struct TrajectoryPair {
  long long entry = -1;
  double sigma = 0.0;
  JointTrajectory forward;
  JointTrajectory backward;
};

struct SoupSample {
  double u = 0.0;
  std::vector<TrajectoryPair> trajectories;
  double cap_estimate = 0.0;     // intensity / u
  double acceptance_rate = 1.0;  // backward rejection efficiency
};

struct OccupationField {
  std::unordered_map<long long, double> L;
  double level = 0.0;
};

// Sites of K with a neighbor outside K (the support of the equilibrium measure).
std::vector<long long> inner_boundary(const Domain& dom, const std::vector<long long>& K);

// Reusable sampler for the quadratic case; the equilibrium measure is solved
// once at construction.
class GaussianSoupSampler {
 public:
  explicit GaussianSoupSampler(SoupConfig cfg);
  const Equilibrium& equilibrium() const { return eq_; }
  SoupSample sample(std::mt19937_64& rng) const;

 private:
  SoupConfig cfg_;
  Equilibrium eq_;
  Potential quad_;
  std::vector<long long> entry_sites_;
  std::vector<double> entry_cum_;  // cumulative equilibrium weights
};

// General-environment sampler; the σ-normalizer grid is estimated once at
// construction by MC over tilted fields and short escape walks.
class GeneralSoupSampler {
 public:
  GeneralSoupSampler(SoupConfig cfg, Potential p);
  SoupSample sample(std::mt19937_64& rng) const;
  const std::vector<double>& sigma_grid() const { return sigma_grid_; }
  const std::vector<double>& normalizer() const { return c_hat_; }
  double total_intensity() const { return intensity_; }

 private:
  SoupConfig cfg_;
  Potential p_;
  std::vector<long long> boundary_;
  std::vector<double> sigma_grid_, c_hat_;
  std::vector<double> sigma_cum_;  // fine-grid cumulative density
  std::vector<double> sigma_fine_;
  double intensity_ = 0.0;

  std::vector<double> draw_field(double sigma, uint64_t chain_seed) const;
  TiltSpec tilt_at(double sigma) const;
};

// Quadratic-potential soup: Poisson(u cap(K)) trajectories, entries from the
// normalized equilibrium measure, forward simple random walk killed at the box
// boundary, backward walk conditioned (by rejection) never to return to K.
SoupSample sample_gaussian_soup(const SoupConfig& cfg, std::mt19937_64& rng);

// General convex potential: σ drawn with density proportional to
// (sqrt(2u) - σ) times an MC-estimated normalizer, the environment φ from the
// tilted field dynamics, the entry site from the estimated escape rates, and
// joint forward/backward walks in the evolving environment.
SoupSample sample_general_soup(const SoupConfig& cfg, const Potential& p, std::mt19937_64& rng);

// Escape-rate estimate of the equilibrium weight at x in environment phi:
// short-time escape frequency with Richardson extrapolation over {t, t/2}.
double escape_rate(const Domain& box, const Potential& p, const TiltSpec& tilt,
                   const std::vector<double>& phi, const std::vector<long long>& K, long long x,
                   double sub_dt, long long n_walks, double horizon, std::mt19937_64& rng);

OccupationField occupation_field(const SoupSample& s);

// <L_N, V> = Σ_x (cell average of V at x) N^{-2} L_x.
double rescale_occupation(const OccupationField& L, int N, const Domain& dom, const MacroFn& V);

// Same pairing against an already-discretized potential (values = N^{-2} cell avg).
double rescale_occupation(const OccupationField& L, const std::vector<double>& v_lattice);

}  // namespace gibbs
