#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gibbs/lattice.hpp"

namespace gibbs {

// Matrix-free application of A = (-Δ) - diag(V) + mass on a Domain.
// Dirichlet boxes treat exterior sites as 0 (the diagonal keeps the full 2d).
struct LatticeOperator {
  const Domain* dom = nullptr;
  const std::vector<double>* V = nullptr;  // may be null
  double mass = 0.0;
  const std::vector<uint8_t>* excluded = nullptr;  // optional site mask (treated as 0)

  void apply(const std::vector<double>& f, std::vector<double>& out) const;
  double diag(long long i) const;
};

struct CgReport {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

// Jacobi-preconditioned conjugate gradients; throws std::runtime_error when the
// relative residual does not reach tol.
CgReport cg_solve(const LatticeOperator& A, const std::vector<double>& b,
                  std::vector<double>& x, double tol = 1e-10, int max_iter = 200000);

enum class GreenConvention { occupation, visits };

// Finite-volume Green function G = (-Δ - V + mass)^{-1} with column caching.
// Internally everything is stored in the occupation convention; the visits
// convention multiplies values by 2d (unit-jump-rate walk).
struct LatticeGreen {
  Domain dom;
  std::vector<double> V;  // empty means 0
  double mass = 0.0;
  GreenConvention convention = GreenConvention::occupation;
  double tol = 1e-10;
  mutable double worst_residual = 0.0;
  mutable std::map<long long, std::vector<double>> columns_;

  double factor() const { return convention == GreenConvention::visits ? 2.0 * dom.dim : 1.0; }
  const std::vector<double>& column(long long y) const;  // occupation convention
  double at(long long x, long long y) const;             // convention applied
  std::vector<double> solve(const std::vector<double>& rhs) const;  // occupation convention
  // <f, G^power f> in the chosen convention; one linear solve for both powers.
  double quad_form(const std::vector<double>& f, int power) const;
};

// Builds the Green function after checking the tilt is numerically admissible:
// sup (-Δ + mass)^{-1} V_+ < 1. Throws std::invalid_argument otherwise, and for
// a periodic domain with mass <= 0 (singular operator).
LatticeGreen green_solve(const Domain& dom, std::vector<double> V, double mass,
                         GreenConvention conv = GreenConvention::occupation,
                         double tol = 1e-10);

// ---------------------------------------------------------------------------
// Heat kernel of the tilted walk: column of exp(t (L_clock + diag(V))) where
// L_clock is Δ/(2d) for the unit-total-rate clock or Δ for rate 1 per edge.

enum class HeatClock { unit_rate, edge_rate };
enum class HeatMethod { krylov_expm, mc };

// Deterministic Lanczos expm: returns the full column x -> q_t^V(x, y).
std::vector<double> heat_kernel_column(const Domain& dom, const std::vector<double>& V,
                                       long long y, double t, HeatClock clock,
                                       double tol = 1e-10);

struct HeatKernelValue {
  double value = 0.0;
  double std_error = 0.0;  // zero for the deterministic method
};

HeatKernelValue heat_kernel_tilted(const Domain& dom, const std::vector<double>& V,
                                   long long x, long long y, double t, HeatMethod method,
                                   HeatClock clock = HeatClock::unit_rate,
                                   uint64_t seed = 1, long long n_paths = 200000);

// ---------------------------------------------------------------------------
// Discrete potential theory for the simple random walk on a box.

struct Equilibrium {
  std::vector<long long> sites;   // the set K (flat indices into the box)
  std::vector<double> weights;    // equilibrium measure e_K >= 0
  double capacity = 0.0;          // sum of weights (occupation convention)
  std::vector<double> hitting;    // h_K on the whole box (1 on K)
};

// Capacity/equilibrium measure of K inside a Dirichlet box (or a massive
// periodic box, where mass > 0 acts as uniform killing).
Equilibrium srw_capacity(const Domain& box, const std::vector<long long>& K,
                         double mass = 0.0, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Discretization of a macroscopic potential: site value = N^{-2} x cell average.

using MacroFn = std::function<double(double, double, double)>;

struct PotentialOnLattice {
  int N = 1;
  Domain dom;
  std::vector<double> values;
  double macro_sup = 0.0;  // sup |V| over quadrature points
};

// Cell average of V over [c/N, (c+1)/N)^3 by adaptive composite midpoint with
// Richardson extrapolation (target 1e-8).
double cell_average(const MacroFn& V, const Coord& cell, int N);
PotentialOnLattice discretize_potential(const MacroFn& V, int N, const Domain& dom);

// ---------------------------------------------------------------------------
// Pointwise-squared kernel pair sum  S = sum_{x,y} a_x a_y K(x,y)^2  where
// K columns come from `column`. When the centered box, the weights and the
// kernel share the full octahedral symmetry, only orbit representatives are
// solved. `sites` lists the support of a.
double squared_kernel_form(const Domain& dom, const std::vector<long long>& sites,
                           const std::vector<double>& a,
                           const std::function<const std::vector<double>&(long long)>& column,
                           bool use_symmetry);

// Octahedral orbit decomposition of a site set in a centered odd box; returns
// {representative, orbit size} pairs, or an empty vector when the set is not
// symmetric (callers then fall back to the full sum).
std::vector<std::pair<long long, int>> octahedral_orbits(const Domain& dom,
                                                         const std::vector<long long>& sites,
                                                         const std::vector<double>& a);

}  // namespace gibbs
