#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gibbs/lattice.hpp"
#include "gibbs/potential.hpp"

namespace gibbs {

struct FieldState {
  std::vector<double> values;
  double time = 0.0;
};

// External tilt: linear field h and quadratic potential V (energy gets
// -<h, φ> - (1/2) <V, φ²>, so positive V softens the confinement).
struct TiltSpec {
  std::vector<double> h;  // empty means 0
  std::vector<double> V;  // empty means 0
  double lambda0 = 0.05;  // admissibility budget

  // Checks sup V_+ x (euclidean diameter of supp V_+)^2 < lambda0.
  // Throws std::invalid_argument with the computed product otherwise.
  void check_admissible(const Domain& dom) const;
  double admissibility_product(const Domain& dom) const;
};

enum class SamplerKind { langevin, langevin_fourier, heat_bath, fft_exact };

struct ChainConfig {
  SamplerKind kind = SamplerKind::langevin;
  double dt = 0.005;        // Langevin step (ignored by heat_bath / fft_exact)
  long long burn_in = 0;    // steps (Langevin) or sweeps (heat bath)
  long long thinning = 1;   // steps/sweeps between recorded samples
  long long n_samples = 0;  // recorded samples
  uint64_t seed = 1;
  double mass = 0.0;        // extra quadratic confinement (needed on periodic boxes)
};

// Drift of the Langevin dynamics at site x:
//   -Σ_{y~x} U'(φ_x - φ_y) + V(x) φ_x + h(x) - mass φ_x
// Dirichlet boundaries read exterior values as 0.
double drift_at(const Domain& dom, const Potential& u, const std::vector<double>& phi,
                const TiltSpec& tilt, double mass, long long x);

// Euler-Maruyama step φ' = φ + drift dt + sqrt(2 dt) ξ (fresh noise per site).
void langevin_step(const Domain& dom, const Potential& u, FieldState& state, const TiltSpec& tilt,
                   double mass, double dt, std::mt19937_64& rng, bool zero_noise = false);

// Same step with a prebuilt neighbor_table(dom). The plain overload builds the
// table on every call; loops over many steps should build it once and use this.
void langevin_step(const Domain& dom, const std::vector<long long>& nbr, const Potential& u,
                   FieldState& state, const TiltSpec& tilt, double mass, double dt,
                   std::mt19937_64& rng, bool zero_noise = false);

// Site-conditional mean and variance of the quadratic-potential Gibbs sampler.
std::pair<double, double> heat_bath_moments(const Domain& dom, const std::vector<double>& phi,
                                            const TiltSpec& tilt, double mass, long long x);

// One deterministic-order sweep; throws for non-quadratic potentials.
void heat_bath_sweep(const Domain& dom, const Potential& u, FieldState& state,
                     const TiltSpec& tilt, double mass, std::mt19937_64& rng);

// Same sweep with a prebuilt neighbor_table(dom); see langevin_step.
void heat_bath_sweep(const Domain& dom, const std::vector<long long>& nbr, const Potential& u,
                     FieldState& state, const TiltSpec& tilt, double mass, std::mt19937_64& rng);

// Stability bound dt (2 d c2 + sup|V| + mass) < 1/2; throws when violated.
void check_step_stability(const Domain& dom, const Potential& u, const TiltSpec& tilt,
                          const ChainConfig& cfg);

// Runs the configured chain and hands every recorded field to the observer.
// fft_exact requires a periodic box, quadratic potential and empty tilt;
// langevin_fourier requires a periodic box and mass > 0.
void run_chain(const Domain& dom, const Potential& u, const TiltSpec& tilt,
               const ChainConfig& cfg, const std::function<void(const FieldState&)>& observer);

// Scalar-observable convenience wrapper: one series per observable.
std::vector<std::vector<double>> run_chain_observables(
    const Domain& dom, const Potential& u, const TiltSpec& tilt, const ChainConfig& cfg,
    const std::vector<std::function<double(const std::vector<double>&)>>& observables);

}  // namespace gibbs
