#pragma once

#include <string>
#include <vector>

namespace gibbs {

enum class PotentialKind { quadratic, cosine, table };

// Even interaction potential U with uniformly convex second derivative:
// c1 <= U'' <= c2. Only U' and U'' enter the dynamics and the conductances.
//
//   quadratic: U(x) = x^2/2
//   cosine:    U(x) = x^2/2 + a(1 - cos x), 0 <= a < 1
//   table:     U'' given on a symmetric grid, linearly interpolated; U'
//              integrated exactly from the interpolant. Evaluation outside the
//              table range throws std::out_of_range (no extrapolation).
struct Potential {
  PotentialKind kind = PotentialKind::quadratic;
  double amplitude = 0.0;  // cosine a
  double c1 = 1.0, c2 = 1.0;

  // table data (kind == table): nodes sorted ascending, symmetric range
  std::vector<double> eta;
  std::vector<double> upp;
  std::vector<double> uprime_nodes;  // U' at the nodes, from exact integration

  double u_prime(double x) const;
  double u_second(double x) const;

  static Potential quadratic();
  static Potential cosine(double a);
  // Certifies c1 <= upp <= c2 on the grid at construction; throws otherwise.
  static Potential from_table(std::vector<double> eta, std::vector<double> upp,
                              double c1, double c2);
  static Potential from_csv(const std::string& path, double c1, double c2);

  std::string describe() const;
};

struct EllipticityReport {
  double min_second = 0.0, max_second = 0.0;
  bool pass = false;
  std::vector<double> violations;  // grid points where U'' leaves [c1, c2]
};

// Scans U'' on the grid {-range, -range+step, ..., range} against [c1, c2].
EllipticityReport validate_ellipticity(const Potential& u, double grid_step, double range);

}  // namespace gibbs
