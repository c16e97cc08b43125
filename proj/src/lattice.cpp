#include "gibbs/lattice.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gibbs {

Domain::Domain(int dim_, std::vector<int> side_, std::vector<int> origin_, Boundary b)
    : dim(dim_), side(std::move(side_)), origin(std::move(origin_)), boundary(b) {
  if (dim < 1) throw std::invalid_argument("Domain: dimension must be >= 1");
  if ((int)side.size() != dim || (int)origin.size() != dim)
    throw std::invalid_argument("Domain: side/origin size mismatch with dimension");
  for (int s : side)
    if (s < 1) throw std::invalid_argument("Domain: side must be >= 1");
}

Domain Domain::box(int dim, int side, Boundary b) {
  return Domain(dim, std::vector<int>(dim, side), std::vector<int>(dim, 0), b);
}

Domain Domain::centered(int dim, int side, Boundary b) {
  return Domain(dim, std::vector<int>(dim, side), std::vector<int>(dim, -side / 2), b);
}

long long Domain::volume() const {
  long long v = 1;
  for (int s : side) v *= s;
  return v;
}

bool Domain::contains(const Coord& c) const {
  if ((int)c.size() != dim) return false;
  for (int a = 0; a < dim; ++a)
    if (c[a] < origin[a] || c[a] >= origin[a] + side[a]) return false;
  return true;
}

long long Domain::index_of(const Coord& c) const {
  Coord n = normalize(c);
  long long idx = 0;
  for (int a = dim - 1; a >= 0; --a) idx = idx * side[a] + (n[a] - origin[a]);
  return idx;
}

Coord Domain::coord_of(long long idx) const {
  if (idx < 0 || idx >= volume()) throw std::domain_error("coord_of: index out of range");
  Coord c(dim);
  for (int a = 0; a < dim; ++a) {
    c[a] = origin[a] + (int)(idx % side[a]);
    idx /= side[a];
  }
  return c;
}

Coord Domain::normalize(const Coord& c) const {
  if ((int)c.size() != dim) throw std::domain_error("normalize: coordinate dimension mismatch");
  Coord n = c;
  if (boundary == Boundary::periodic) {
    for (int a = 0; a < dim; ++a) {
      int r = (n[a] - origin[a]) % side[a];
      if (r < 0) r += side[a];
      n[a] = origin[a] + r;
    }
    return n;
  }
  if (!contains(n)) throw std::domain_error("normalize: coordinate outside dirichlet box");
  return n;
}

std::string Domain::describe() const {
  std::ostringstream os;
  os << (boundary == Boundary::periodic ? "periodic" : "dirichlet") << " d=" << dim << " side=";
  for (int a = 0; a < dim; ++a) os << (a ? "x" : "") << side[a];
  return os.str();
}

NeighborRef neighbor(const Domain& dom, long long site, int axis, int dir) {
  if (site < 0 || site >= dom.volume()) throw std::domain_error("neighbor: site out of range");
  if (axis < 0 || axis >= dom.dim || (dir != 1 && dir != -1))
    throw std::domain_error("neighbor: bad axis or direction");
  Coord c = dom.coord_of(site);
  c[axis] += dir;
  NeighborRef r;
  r.axis = axis;
  r.dir = dir;
  if (dom.boundary == Boundary::periodic) {
    r.site = dom.index_of(c);
    return r;
  }
  if (dom.contains(c)) {
    r.site = dom.index_of(c);
  } else {
    r.outside = true;
  }
  return r;
}

std::vector<NeighborRef> neighbors(const Domain& dom, long long site) {
  std::vector<NeighborRef> out;
  out.reserve(2 * dom.dim);
  for (int a = 0; a < dom.dim; ++a)
    for (int dir : {-1, 1}) out.push_back(neighbor(dom, site, a, dir));
  return out;
}

std::vector<long long> neighbor_table(const Domain& dom) {
  const long long n = dom.volume();
  const int deg = 2 * dom.dim;
  std::vector<long long> table(static_cast<size_t>(deg) * n);
  for (long long s = 0; s < n; ++s)
    for (int axis = 0; axis < dom.dim; ++axis)
      for (int dir : {-1, 1}) {
        const NeighborRef nb = neighbor(dom, s, axis, dir);
        table[deg * s + 2 * axis + (dir + 1) / 2] = nb.outside ? -1 : nb.site;
      }
  return table;
}

int interior_degree(const Domain& dom, long long site) {
  if (dom.boundary == Boundary::periodic) return 2 * dom.dim;
  int deg = 0;
  for (const auto& n : neighbors(dom, site))
    if (!n.outside) ++deg;
  return deg;
}

Coord cell_of(const std::vector<double>& z, int N) {
  if (N < 1) throw std::invalid_argument("cell_of: N must be >= 1");
  Coord c(z.size());
  for (size_t a = 0; a < z.size(); ++a) c[a] = (int)std::floor((double)N * z[a]);
  return c;
}

}  // namespace gibbs
