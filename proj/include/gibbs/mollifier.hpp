#pragma once

#include <array>
#include <vector>

#include "gibbs/lattice.hpp"

namespace gibbs {

// Normalization constant C of the standard bump ρ(z) = C exp(-1/(1-|z|²)) on |z|<1.
double bump_norm_constant();

// ρ^ε(z) = ε^{-3} ρ(z/ε); ε = 0 is not allowed here.
double mollifier_density(const std::array<double, 3>& z, double eps);

// Discrete mollification kernel at macroscopic point z against scale-N cells:
// weight(x) = N³ ∫_{cell x} ρ^ε(z - w) dw, so sum(weights) N^{-3} = 1 when the
// ε-ball around z is covered by the domain. eps = 0 degenerates to the single
// cell containing z with weight N³. Requires N >= 1/eps (resolution bound).
struct MollifierWeights {
  std::vector<long long> sites;
  std::vector<double> weights;
  double total = 0.0;  // sum(weights) N^{-3}
  int N = 1;
};

MollifierWeights mollifier_weights(const Domain& dom, int N, double eps,
                                   const std::array<double, 3>& z);

// N^{-3} Σ weights φ(site): the mollified block average at the query point.
double apply_weights(const MollifierWeights& w, const std::vector<double>& phi);

// Dense field over the domain with the weights scattered in (kernel layout for
// spectral convolutions on periodic boxes).
std::vector<double> weights_as_field(const Domain& dom, const MollifierWeights& w);

}  // namespace gibbs
