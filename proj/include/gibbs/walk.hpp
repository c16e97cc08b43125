#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "gibbs/field.hpp"
#include "gibbs/lattice.hpp"
#include "gibbs/potential.hpp"

namespace gibbs {

// Conductance of the edge (x, neighbor) in the environment phi:
// a(x,y; φ) = U''(φ_x - φ_y), exterior sites reading 0.
double edge_conductance(const Potential& u, const std::vector<double>& phi, long long x,
                        double phi_neighbor);

struct JumpRecord {
  double time = 0.0;
  long long from = -1;
  long long to = -1;  // -1 when the jump leaves a Dirichlet box
};

struct JointTrajectory {
  long long start = -1;
  long long final_site = -1;  // last interior site occupied
  double end_time = 0.0;      // horizon, kill time or stop time
  bool killed = false;        // absorbed at the Dirichlet boundary
  bool stopped = false;       // entered the stop set
  std::vector<JumpRecord> jumps;
  std::unordered_map<long long, double> occupation;  // site -> total time
};

struct WalkerPath {
  JointTrajectory traj;
  std::vector<std::array<long long, 3>> checkpoint_coords;  // unwrapped positions
};

struct CohortConfig {
  double horizon = 10.0;
  double sub_dt = 0.01;   // field-update interval
  double rate_cap = 0.0;  // uniformization rate; 0 selects 2 d c2
  bool freeze_field = false;
  uint64_t seed = 1;
  std::vector<double> checkpoints;   // sorted times; unwrapped coords recorded
  std::vector<long long> stop_sites; // walker halts when jumping into this set
};

struct CohortResult {
  std::vector<WalkerPath> walkers;
  FieldState final_field;
};

// Walkers move by uniformization (candidate clock of rate R = rate_cap, jump
// across an edge with probability conductance/R) while the shared field
// performs Langevin sub-steps of size sub_dt between candidate epochs. With
// freeze_field the environment stays fixed, which is exact for the quadratic
// potential where conductances do not depend on the field.
CohortResult simulate_cohort(const Domain& dom, const Potential& u, const TiltSpec& tilt,
                             double mass, FieldState field, const std::vector<long long>& starts,
                             const CohortConfig& cfg);

// Single-walker convenience wrapper.
WalkerPath simulate_joint(const Domain& dom, const Potential& u, const TiltSpec& tilt, double mass,
                          FieldState field, long long start, const CohortConfig& cfg);

// exp(∫ V(X_s) ds), computed exactly from the aggregated occupation times.
double feynman_kac_weight(const JointTrajectory& traj, const std::vector<double>& V);

double occupation_time(const JointTrajectory& traj, long long site);

// First entrance time of K (0 when the walk starts there); +inf when never hit.
double hitting_time(const JointTrajectory& traj, const std::vector<long long>& K);

inline double infinite_time() { return std::numeric_limits<double>::infinity(); }

}  // namespace gibbs
