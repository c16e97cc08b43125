#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gibbs/field.hpp"
#include "gibbs/lattice.hpp"
#include "gibbs/potential.hpp"

namespace gibbs {

// Outcome of one named verification (criterion or experiment-internal check).
struct CheckResult {
  std::string name;
  bool pass = false;
  bool inconclusive = false;  // error bars too wide to decide
  std::string detail;
  std::vector<std::pair<std::string, double>> values;  // ordered numeric outputs
};

// ---------------------------------------------------------------------------
// Experiment configuration (read from JSON).
// ---------------------------------------------------------------------------

struct DomainConfig {
  int dim = 3;
  int side = 9;
  std::string boundary = "dirichlet";
  Domain build() const;
};

struct PotentialConfig {
  std::string kind = "quadratic";
  double amplitude = 0.0;  // cosine anharmonicity
  std::string table_path;  // tabulated U' (csv)
  Potential build() const;
};

struct TiltConfig {
  // Bump tilt: V = amplitude * bump_L at the macro center, discretized at
  // resolution N; or explicit site values.
  double lambda = 0.0;  // bump strength; 0 disables the bump
  double L = 0.5;
  int N = 1;
  std::vector<std::vector<int>> sites;  // explicit sites (coords)
  std::vector<double> v_values;         // quadratic tilt per site
  std::vector<double> h_values;         // linear tilt per site
  bool couple_h_to_v = false;           // h = V (soup convention)
  TiltSpec build(const Domain& dom) const;
};

struct ChainSection {
  std::string kind = "heat_bath";
  double dt = 0.005;
  long long burn_in = 1000;
  long long thinning = 5;
  long long n_samples = 10000;
  double mass = 0.0;
  ChainConfig build(uint64_t seed) const;
};

struct WalkSection {
  double horizon = 20.0;
  double sub_dt = 0.02;
  long long walkers = 256;
  long long cohorts = 16;
  bool freeze_field = false;
  std::vector<double> checkpoints{0.0, 5.0, 10.0, 15.0, 20.0};
};

struct SoupSection {
  double u = 0.1;
  long long n_soups = 2000;
  std::vector<std::vector<int>> K;  // coords; empty means supp of the tilt
};

struct LadderSection {
  std::vector<int> Ns{8, 16, 32};
  double extent = 2.0;  // macro box [-extent, extent]^3
};

struct RunConfig {
  std::string experiment = "green";
  uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = "out";
  DomainConfig domain;
  PotentialConfig potential;
  TiltConfig tilt;
  ChainSection chain;
  WalkSection walk;
  SoupSection soup;
  LadderSection ladder;
  std::vector<std::vector<int>> observables;  // site coords

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  std::string canonical_json() const;  // normalized dump used for hashing
};

// Every violated invariant in human-readable form; empty means valid.
// Checks: potential ellipticity certificate, tilt admissibility, step
// stability, boundary/mass compatibility, soup invariants, experiment name.
std::vector<std::string> validate(const RunConfig& cfg);

struct RunOutcome {
  std::vector<CheckResult> checks;
  std::string report_path;
  std::string manifest_path;
  std::vector<std::string> artifact_paths;
  bool all_pass = false;
};

// Runs the configured experiment, writing report.json, CSV artifacts and
// manifest.json (config hash, code version, timestamps, artifact hashes,
// verdicts) into output_dir. Throws std::invalid_argument when validate()
// reports violations.
RunOutcome run(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Acceptance criteria, sized for a single desktop core.
// ---------------------------------------------------------------------------

CheckResult criterion_gaussian_covariance(uint64_t seed, int threads);
CheckResult criterion_dynamic_covariance(uint64_t seed, int threads);
CheckResult criterion_isomorphism(uint64_t seed, int threads);
CheckResult criterion_green_ladder(uint64_t seed, int threads);
CheckResult criterion_mollified_kernel(uint64_t seed, int threads);
CheckResult criterion_heat_kernel_domination(uint64_t seed, int threads);
CheckResult criterion_variance_bounds(uint64_t seed, int threads);
CheckResult criterion_homogenization(uint64_t seed, int threads);
CheckResult criterion_wick_variance(uint64_t seed, int threads);
CheckResult criterion_occupation_trend(uint64_t seed, int threads);
CheckResult criterion_sweeping(uint64_t seed, int threads);
CheckResult criterion_determinism(uint64_t seed, int threads);

// Dispatch by 1-based index; throws std::out_of_range otherwise.
CheckResult run_criterion(int index, uint64_t seed, int threads);
int criterion_count();
std::string criterion_label(int index);

// FNV-1a 64-bit hash of a byte string, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace gibbs
