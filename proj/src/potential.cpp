#include "gibbs/potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gibbs {

Potential Potential::quadratic() {
  Potential p;
  p.kind = PotentialKind::quadratic;
  p.c1 = p.c2 = 1.0;
  return p;
}

Potential Potential::cosine(double a) {
  // a >= 1 yields a non-elliptic U''; allowed here so that validate_ellipticity
  // can flag it, but rejected by every sampler through the validation gate.
  if (a < 0.0) throw std::invalid_argument("Potential::cosine: amplitude must be >= 0");
  Potential p;
  p.kind = PotentialKind::cosine;
  p.amplitude = a;
  p.c1 = 1.0 - a;
  p.c2 = 1.0 + a;
  return p;
}

Potential Potential::from_table(std::vector<double> eta, std::vector<double> upp,
                                double c1, double c2) {
  if (eta.size() != upp.size() || eta.size() < 2)
    throw std::invalid_argument("Potential::from_table: need >= 2 matching nodes");
  for (size_t i = 1; i < eta.size(); ++i)
    if (!(eta[i] > eta[i - 1]))
      throw std::invalid_argument("Potential::from_table: nodes must increase");
  if (std::abs(eta.front() + eta.back()) > 1e-12)
    throw std::invalid_argument("Potential::from_table: grid must be symmetric about 0");
  // Mandatory ellipticity certificate on the declared band.
  for (size_t i = 0; i < upp.size(); ++i) {
    if (upp[i] < c1 - 1e-12 || upp[i] > c2 + 1e-12) {
      std::ostringstream os;
      os << "Potential::from_table: ellipticity certificate failed at eta=" << eta[i]
         << " (U''=" << upp[i] << ", band [" << c1 << "," << c2 << "])";
      throw std::invalid_argument(os.str());
    }
  }
  Potential p;
  p.kind = PotentialKind::table;
  p.c1 = c1;
  p.c2 = c2;
  p.eta = std::move(eta);
  p.upp = std::move(upp);
  // U'(x) = integral of the piecewise-linear U'' from 0, exact per segment.
  // Anchor the cumulative at the node bracketing 0, then shift so U'(0) = 0.
  size_t n = p.eta.size();
  p.uprime_nodes.assign(n, 0.0);
  for (size_t i = 1; i < n; ++i) {
    double h = p.eta[i] - p.eta[i - 1];
    p.uprime_nodes[i] = p.uprime_nodes[i - 1] + 0.5 * h * (p.upp[i] + p.upp[i - 1]);
  }
  // value of the cumulative at x=0 by interpolation
  auto cum_at = [&](double x) {
    auto it = std::upper_bound(p.eta.begin(), p.eta.end(), x);
    size_t j = std::min(n - 1, std::max<size_t>(1, (size_t)(it - p.eta.begin())));
    double x0 = p.eta[j - 1], x1 = p.eta[j];
    double u0 = p.upp[j - 1], u1 = p.upp[j];
    double t = x - x0;
    double slope = (u1 - u0) / (x1 - x0);
    return p.uprime_nodes[j - 1] + u0 * t + 0.5 * slope * t * t;
  };
  double c0 = cum_at(0.0);
  for (size_t i = 0; i < n; ++i) p.uprime_nodes[i] -= c0;
  return p;
}

Potential Potential::from_csv(const std::string& path, double c1, double c2) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Potential::from_csv: cannot open " + path);
  std::vector<double> eta, upp;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x, u;
    if (ls >> x >> u) {
      eta.push_back(x);
      upp.push_back(u);
    }
  }
  return from_table(std::move(eta), std::move(upp), c1, c2);
}

double Potential::u_second(double x) const {
  switch (kind) {
    case PotentialKind::quadratic:
      return 1.0;
    case PotentialKind::cosine:
      return 1.0 + amplitude * std::cos(x);
    case PotentialKind::table: {
      if (x < eta.front() || x > eta.back())
        throw std::out_of_range("Potential::u_second: eta outside table range");
      auto it = std::upper_bound(eta.begin(), eta.end(), x);
      size_t j = std::min(eta.size() - 1, std::max<size_t>(1, (size_t)(it - eta.begin())));
      double t = (x - eta[j - 1]) / (eta[j] - eta[j - 1]);
      return (1.0 - t) * upp[j - 1] + t * upp[j];
    }
  }
  return 1.0;
}

double Potential::u_prime(double x) const {
  switch (kind) {
    case PotentialKind::quadratic:
      return x;
    case PotentialKind::cosine:
      return x + amplitude * std::sin(x);
    case PotentialKind::table: {
      if (x < eta.front() || x > eta.back())
        throw std::out_of_range("Potential::u_prime: eta outside table range");
      auto it = std::upper_bound(eta.begin(), eta.end(), x);
      size_t j = std::min(eta.size() - 1, std::max<size_t>(1, (size_t)(it - eta.begin())));
      double x0 = eta[j - 1], x1 = eta[j];
      double u0 = upp[j - 1], u1 = upp[j];
      double t = x - x0;
      double slope = (u1 - u0) / (x1 - x0);
      return uprime_nodes[j - 1] + u0 * t + 0.5 * slope * t * t;
    }
  }
  return x;
}

std::string Potential::describe() const {
  std::ostringstream os;
  switch (kind) {
    case PotentialKind::quadratic:
      os << "quadratic";
      break;
    case PotentialKind::cosine:
      os << "cosine(a=" << amplitude << ")";
      break;
    case PotentialKind::table:
      os << "table(" << eta.size() << " nodes)";
      break;
  }
  os << " c1=" << c1 << " c2=" << c2;
  return os.str();
}

EllipticityReport validate_ellipticity(const Potential& u, double grid_step, double range) {
  if (grid_step <= 0 || range <= 0)
    throw std::invalid_argument("validate_ellipticity: step and range must be positive");
  EllipticityReport rep;
  rep.min_second = 1e300;
  rep.max_second = -1e300;
  for (double x = -range; x <= range + 1e-12; x += grid_step) {
    double s;
    try {
      s = u.u_second(x);
    } catch (const std::out_of_range&) {
      rep.violations.push_back(x);
      continue;
    }
    rep.min_second = std::min(rep.min_second, s);
    rep.max_second = std::max(rep.max_second, s);
    if (s <= 0.0 || s < u.c1 - 1e-12 || s > u.c2 + 1e-12) rep.violations.push_back(x);
  }
  rep.pass = rep.violations.empty() && rep.min_second > 0.0;
  return rep;
}

}  // namespace gibbs
