#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gibbs {

enum class Boundary { periodic, dirichlet };

// Integer lattice coordinates, one entry per axis.
using Coord = std::vector<int>;

// Axis-aligned box of Z^d. Sites are addressed either by Coord or by a flat
// index in [0, volume()). Coordinates along axis a live in
// [origin[a], origin[a] + side[a]). With periodic boundary the box wraps; with
// dirichlet boundary sites outside carry the value 0.
struct Domain {
  int dim = 3;
  std::vector<int> side;
  std::vector<int> origin;
  Boundary boundary = Boundary::dirichlet;

  Domain() = default;
  Domain(int dim_, std::vector<int> side_, std::vector<int> origin_, Boundary b);

  // Cube of given side with origin 0.
  static Domain box(int dim, int side, Boundary b);
  // Cube centered at the origin site, origin = -side/2 per axis.
  static Domain centered(int dim, int side, Boundary b);

  long long volume() const;
  bool contains(const Coord& c) const;
  long long index_of(const Coord& c) const;  // throws std::domain_error outside
  Coord coord_of(long long idx) const;
  // Wraps periodic coordinates into the box; identity for contained dirichlet
  // coordinates, throws std::domain_error otherwise.
  Coord normalize(const Coord& c) const;
  std::string describe() const;
};

struct NeighborRef {
  long long site = -1;  // flat index, -1 when outside a dirichlet box
  bool outside = false;
  int axis = 0;
  int dir = 0;  // +1 or -1
};

// All 2*dim lattice neighbors of the given site. Periodic domains wrap;
// dirichlet domains flag exterior neighbors. Throws std::domain_error when the
// site index itself is out of range.
std::vector<NeighborRef> neighbors(const Domain& dom, long long site);
NeighborRef neighbor(const Domain& dom, long long site, int axis, int dir);

// Flat all-sites neighbor table: entry [2*dim*site + 2*axis + (dir+1)/2] is
// the flat index of the neighbor along axis in direction dir, or -1 for the
// exterior of a dirichlet box. The 2*dim entries of a site are in neighbors()
// order. neighbor()/neighbors() allocate coordinates on every call, which
// dominates tight sweep loops; build this table once and index it instead.
std::vector<long long> neighbor_table(const Domain& dom);

// Number of interior neighbors (2*dim for periodic, fewer on a dirichlet face).
int interior_degree(const Domain& dom, long long site);

// Cell of the macroscopic point z at resolution N: coordinate-wise floor(N z).
Coord cell_of(const std::vector<double>& z, int N);

}  // namespace gibbs
