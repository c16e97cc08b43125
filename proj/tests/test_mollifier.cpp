#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "gibbs/lattice.hpp"
#include "gibbs/mollifier.hpp"

using namespace gibbs;

TEST_SUITE("mollifier") {

TEST_CASE("density normalises to one") {
  // Riemann sum of rho^eps over a grid that covers the eps-ball.
  const double eps = 0.5;
  const int m = 40;  // grid cells per axis across [-eps, eps]
  const double h = 2.0 * eps / m;
  double sum = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        std::array<double, 3> z = {-eps + (i + 0.5) * h, -eps + (j + 0.5) * h,
                                   -eps + (k + 0.5) * h};
        sum += mollifier_density(z, eps) * h * h * h;
      }
  CHECK(sum == doctest::Approx(1.0).epsilon(2e-3));

  // Scale invariance of the sup: eps^{-3} rho(0).
  const double rho0 = mollifier_density({0.0, 0.0, 0.0}, 1.0);
  CHECK(mollifier_density({0.0, 0.0, 0.0}, 0.5) == doctest::Approx(8.0 * rho0).epsilon(1e-12));

  // Support: vanishes outside |z| < eps.
  CHECK(mollifier_density({0.51, 0.0, 0.0}, 0.5) == 0.0);
  CHECK(mollifier_density({0.3, 0.3, 0.3}, 0.5) == 0.0);  // |z| = 0.52
  CHECK(mollifier_density({0.49, 0.0, 0.0}, 0.5) > 0.0);
}

TEST_CASE("weights integrate a constant field to one") {
  const int N = 16;
  Domain dom = Domain::centered(3, 2 * N, Boundary::dirichlet);
  const double eps = 0.3;
  MollifierWeights w = mollifier_weights(dom, N, eps, {0.1, -0.2, 0.05});
  REQUIRE(w.sites.size() == w.weights.size());
  REQUIRE(!w.sites.empty());

  std::vector<double> ones(dom.volume(), 1.0);
  CHECK(apply_weights(w, ones) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(w.total == doctest::Approx(1.0).epsilon(1e-4));

  // No weight may exceed the sup of the density times the cell volume scale.
  const double sup_w = mollifier_density({0.0, 0.0, 0.0}, eps);
  for (double wi : w.weights) {
    CHECK(wi >= 0.0);
    CHECK(wi <= sup_w * (1.0 + 1e-9));
  }
}

TEST_CASE("weights inherit the reflection symmetry at the origin") {
  const int N = 8;
  Domain dom = Domain::centered(3, 2 * N, Boundary::dirichlet);
  MollifierWeights w = mollifier_weights(dom, N, 0.4, {0.0, 0.0, 0.0});
  std::vector<double> field = weights_as_field(dom, w);
  // Cell x covers [x/N, (x+1)/N), so the reflection of cell x is -1-x.
  for (long long i = 0; i < dom.volume(); ++i) {
    auto c = dom.coord_of(i);
    Coord r = {-1 - c[0], -1 - c[1], -1 - c[2]};
    CHECK(field[i] == doctest::Approx(field[dom.index_of(r)]).epsilon(1e-9));
  }
}

TEST_CASE("degenerate scale collapses to the enclosing cell") {
  const int N = 8;
  Domain dom = Domain::centered(3, 2 * N, Boundary::dirichlet);
  MollifierWeights w = mollifier_weights(dom, N, 0.0, {0.3, -0.4, 0.05});
  REQUIRE(w.sites.size() == 1);
  CHECK(w.weights[0] == doctest::Approx(static_cast<double>(N) * N * N));
  // cell_of floors N z per axis.
  auto c = dom.coord_of(w.sites[0]);
  CHECK(c[0] == 2);   // floor(8 * 0.3)
  CHECK(c[1] == -4);  // floor(8 * -0.4)
  CHECK(c[2] == 0);

  // Resolution bound: the lattice must resolve the mollifier scale.
  CHECK_THROWS_AS(mollifier_weights(dom, N, 0.05, {0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("scattered field reproduces the sparse weights") {
  const int N = 8;
  Domain dom = Domain::centered(3, 2 * N, Boundary::periodic);
  MollifierWeights w = mollifier_weights(dom, N, 0.25, {0.2, 0.0, -0.1});
  std::vector<double> field = weights_as_field(dom, w);
  double sparse_total = 0.0;
  for (size_t k = 0; k < w.sites.size(); ++k) {
    CHECK(field[w.sites[k]] == doctest::Approx(w.weights[k]));
    sparse_total += w.weights[k];
  }
  double dense_total = 0.0;
  for (double v : field) dense_total += v;
  CHECK(dense_total == doctest::Approx(sparse_total).epsilon(1e-12));
}

TEST_CASE("weights are translation covariant by whole cells") {
  const int N = 8;
  Domain dom = Domain::centered(3, 2 * N, Boundary::dirichlet);
  const double eps = 0.3;
  std::array<double, 3> z = {0.11, -0.07, 0.02};
  std::array<double, 3> zs = {z[0] + 1.0 / N, z[1], z[2]};
  MollifierWeights a = mollifier_weights(dom, N, eps, z);
  MollifierWeights b = mollifier_weights(dom, N, eps, zs);
  REQUIRE(a.sites.size() == b.sites.size());
  std::vector<double> fa = weights_as_field(dom, a);
  for (size_t k = 0; k < b.sites.size(); ++k) {
    auto c = dom.coord_of(b.sites[k]);
    c[0] -= 1;  // shift back one cell along the first axis
    CHECK(b.weights[k] == doctest::Approx(fa[dom.index_of(c)]).epsilon(1e-9));
  }
}

}  // TEST_SUITE
