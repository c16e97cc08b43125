#pragma once

#include <array>
#include <vector>

#include "gibbs/green.hpp"
#include "gibbs/lattice.hpp"

namespace gibbs {

// Finite-difference reference solver for (-scale Δ - W + mass) on an n³ grid
// of cell centers over [lo,hi]³. Used as the continuum target that lattice
// quantities are compared against; refine n to control its own error.
struct ContinuumModel {
  int n = 0;
  double lo = 0.0, hi = 0.0;
  double scale = 1.0;
  double mass = 0.0;
  Domain grid;
  double h = 0.0;
  std::vector<double> W;  // empty means 0

  ContinuumModel(int n, double lo, double hi, double scale, double mass, Boundary boundary);

  std::array<double, 3> node(long long idx) const;
  std::vector<double> sample_fn(const MacroFn& f) const;  // node values
  void set_potential(const MacroFn& w);
  void set_potential_values(std::vector<double> w);

  // Values of (-scale Δ - W + mass)^{-1} f at the nodes.
  std::vector<double> solve(const std::vector<double>& f) const;
  // <f, G^power f> in L²([lo,hi]³).
  double quad_form_l2(const std::vector<double>& f, int power) const;
  double integral(const std::vector<double>& f) const;  // h³ Σ f
  // ∬ a(z) K(z,z')² a(z') dz dz' with K the kernel of the inverse.
  double squared_kernel_form_l2(const std::vector<double>& a, bool use_symmetry = true) const;

 private:
  LatticeGreen make_green() const;
};

// ∫₀¹ (1-σ) S(σ) dσ with S(σ) = ∬ V K_σ² V, K_σ the kernel of
// (-scale Δ - σ V + mass)^{-1}; Simpson rule with n_sigma intervals (even).
double avv_quadrature(const ContinuumModel& base, const std::vector<double>& V, int n_sigma);

}  // namespace gibbs
