#include "gibbs/soup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "gibbs/rng.hpp"

namespace gibbs {

void SoupConfig::validate(const Domain& dom) const {
  if (u < 0.0) throw std::invalid_argument("soup: level u must be >= 0");
  if (K.empty()) throw std::invalid_argument("soup: window K is empty");
  if (kill_box.boundary != Boundary::dirichlet)
    throw std::invalid_argument("soup: kill_box must be a Dirichlet box");
  const long long n = kill_box.volume();
  for (long long s : K)
    if (s < 0 || s >= n) throw std::invalid_argument("soup: K site outside kill_box");
  if (!tilt.V.empty()) {
    if (static_cast<long long>(tilt.V.size()) != n)
      throw std::invalid_argument("soup: tilt V size mismatch");
    std::unordered_set<long long> k(K.begin(), K.end());
    for (long long i = 0; i < n; ++i)
      if (tilt.V[i] != 0.0 && !k.count(i))
        throw std::invalid_argument("soup: K must contain the support of V");
    if (tilt.h != tilt.V)
      throw std::invalid_argument("soup: the linear tilt must equal V (coupled tilt)");
  } else if (!tilt.h.empty()) {
    throw std::invalid_argument("soup: the linear tilt must equal V (coupled tilt)");
  }
  // Kill box comfortably larger than K.
  int diam = 0;
  for (int a = 0; a < kill_box.dim; ++a) {
    int lo = kill_box.coord_of(K[0])[a], hi = lo;
    for (long long s : K) {
      const int c = kill_box.coord_of(s)[a];
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    diam = std::max(diam, hi - lo);
  }
  for (int a = 0; a < kill_box.dim; ++a)
    if (kill_box.side[a] < 4 * std::max(diam, 1))
      throw std::invalid_argument("soup: kill_box side must be at least 4 x diam(K)");
  (void)dom;
}

std::vector<long long> inner_boundary(const Domain& dom, const std::vector<long long>& K) {
  std::unordered_set<long long> k(K.begin(), K.end());
  std::vector<long long> b;
  for (long long s : K) {
    bool edge = false;
    for (const NeighborRef& nb : neighbors(dom, s))
      if (nb.outside || !k.count(nb.site)) {
        edge = true;
        break;
      }
    if (edge) b.push_back(s);
  }
  return b;
}

namespace {

double sample_triangular_sigma(double u, std::mt19937_64& rng) {
  // Density proportional to (sqrt(2u) - σ) on [0, sqrt(2u)].
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double s = std::sqrt(2.0 * u);
  return s * (1.0 - std::sqrt(1.0 - unif(rng)));
}

// Forced first jump of the backward walk (no initial holding time). Returns
// the neighbor reference; outside.outside = true means immediate absorption.
NeighborRef backward_first_jump(const Domain& dom, const Potential& p,
                                const std::vector<double>& phi, long long x,
                                std::mt19937_64& rng) {
  double total = 0.0;
  std::vector<std::pair<NeighborRef, double>> edges;
  for (int axis = 0; axis < dom.dim; ++axis)
    for (int dir = -1; dir <= 1; dir += 2) {
      const NeighborRef nb = neighbor(dom, x, axis, dir);
      const double pn = nb.outside ? 0.0 : phi[nb.site];
      const double a = edge_conductance(p, phi, x, pn);
      edges.emplace_back(nb, a);
      total += a;
    }
  double target = std::uniform_real_distribution<double>(0.0, total)(rng);
  for (const auto& [nb, a] : edges) {
    if (target < a) return nb;
    target -= a;
  }
  return edges.back().first;
}

struct BackwardResult {
  JointTrajectory traj;
  long long attempts = 0;
};

BackwardResult sample_backward(const Domain& box, const Potential& p, const TiltSpec& tilt,
                               const std::vector<double>& phi0, long long x,
                               const std::unordered_set<long long>& k, bool freeze,
                               double horizon, double sub_dt, int max_rejection,
                               std::mt19937_64& rng) {
  BackwardResult out;
  for (int attempt = 0; attempt < max_rejection; ++attempt) {
    ++out.attempts;
    const NeighborRef first = backward_first_jump(box, p, phi0, x, rng);
    if (first.outside) {
      out.traj.start = x;
      out.traj.final_site = x;
      out.traj.killed = true;
      out.traj.end_time = 0.0;
      out.traj.jumps.push_back({0.0, x, -1});
      return out;
    }
    if (k.count(first.site)) continue;  // re-entered the window immediately
    CohortConfig wc;
    wc.horizon = horizon;
    wc.sub_dt = sub_dt;
    wc.freeze_field = freeze;
    wc.seed = rng();
    wc.stop_sites.assign(k.begin(), k.end());
    FieldState f;
    f.values = phi0;
    WalkerPath path = simulate_joint(box, p, tilt, 0.0, std::move(f), first.site, wc);
    if (path.traj.stopped) continue;  // returned to the window later
    if (!path.traj.killed)
      throw std::runtime_error("soup: backward walk survived the horizon; enlarge horizon");
    out.traj = std::move(path.traj);
    out.traj.jumps.insert(out.traj.jumps.begin(), {0.0, x, first.site});
    out.traj.start = x;
    return out;
  }
  throw std::runtime_error(
      "soup: backward rejection cap exceeded; the walk keeps returning to K, use a larger kill_box");
}

}  // namespace

GaussianSoupSampler::GaussianSoupSampler(SoupConfig cfg)
    : cfg_(std::move(cfg)), quad_(Potential::quadratic()) {
  cfg_.validate(cfg_.kill_box);
  eq_ = srw_capacity(cfg_.kill_box, cfg_.K);
  const std::vector<long long> bnd = inner_boundary(cfg_.kill_box, cfg_.K);
  std::unordered_set<long long> bset(bnd.begin(), bnd.end());
  double cum = 0.0;
  for (size_t i = 0; i < eq_.sites.size(); ++i) {
    if (!bset.count(eq_.sites[i])) continue;  // interior weights vanish
    cum += eq_.weights[i];
    entry_sites_.push_back(eq_.sites[i]);
    entry_cum_.push_back(cum);
  }
  if (entry_sites_.empty()) throw std::runtime_error("soup: empty entry law");
}

SoupSample GaussianSoupSampler::sample(std::mt19937_64& rng) const {
  SoupSample out;
  out.u = cfg_.u;
  out.cap_estimate = eq_.capacity;
  std::poisson_distribution<long long> pois(cfg_.u * eq_.capacity);
  const long long count = cfg_.u > 0.0 ? pois(rng) : 0;
  const std::unordered_set<long long> k(cfg_.K.begin(), cfg_.K.end());
  std::vector<double> zero_field(cfg_.kill_box.volume(), 0.0);
  TiltSpec no_tilt;
  long long attempts = 0;
  for (long long i = 0; i < count; ++i) {
    TrajectoryPair tp;
    const double total = entry_cum_.back();
    const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
    const size_t idx =
        std::lower_bound(entry_cum_.begin(), entry_cum_.end(), target) - entry_cum_.begin();
    tp.entry = entry_sites_[std::min(idx, entry_sites_.size() - 1)];
    tp.sigma = sample_triangular_sigma(cfg_.u, rng);
    CohortConfig wc;
    wc.horizon = cfg_.horizon;
    wc.sub_dt = cfg_.sub_dt;
    wc.freeze_field = true;
    wc.seed = rng();
    FieldState f;
    f.values = zero_field;
    WalkerPath fwd = simulate_joint(cfg_.kill_box, quad_, no_tilt, 0.0, std::move(f), tp.entry, wc);
    if (!fwd.traj.killed)
      throw std::runtime_error("soup: forward walk survived the horizon; enlarge horizon");
    tp.forward = std::move(fwd.traj);
    BackwardResult bwd = sample_backward(cfg_.kill_box, quad_, no_tilt, zero_field, tp.entry, k,
                                         true, cfg_.horizon, cfg_.sub_dt, cfg_.max_rejection, rng);
    attempts += bwd.attempts;
    tp.backward = std::move(bwd.traj);
    out.trajectories.push_back(std::move(tp));
  }
  out.acceptance_rate = out.trajectories.empty()
                            ? 1.0
                            : static_cast<double>(out.trajectories.size()) /
                                  std::max<long long>(attempts, 1);
  return out;
}

SoupSample sample_gaussian_soup(const SoupConfig& cfg, std::mt19937_64& rng) {
  return GaussianSoupSampler(cfg).sample(rng);
}

// ---------------------------------------------------------------------------
// General-environment soup.

double escape_rate(const Domain& box, const Potential& p, const TiltSpec& tilt,
                   const std::vector<double>& phi, const std::vector<long long>& K, long long x,
                   double sub_dt, long long n_walks, double horizon, std::mt19937_64& rng) {
  const double t_probe = 1.0 / (2.0 * box.dim * p.c2);
  const std::unordered_set<long long> k(K.begin(), K.end());
  CohortConfig wc;
  wc.horizon = horizon;
  wc.sub_dt = sub_dt;
  wc.freeze_field = p.kind == PotentialKind::quadratic;
  wc.seed = rng();
  FieldState f;
  f.values = phi;
  // One shared field path for the cohort: each walker is still marginally a
  // copy of the joint process, so the escape frequencies stay unbiased.
  std::vector<long long> starts(n_walks, x);
  CohortResult res = simulate_cohort(box, p, tilt, 0.0, std::move(f), starts, wc);
  long long undecided = 0;
  auto presence_after = [&](const JointTrajectory& traj, double t) {
    long long cur = traj.start;
    for (const JumpRecord& j : traj.jumps) {
      if (cur >= 0 && k.count(cur) && j.time > t) return true;
      cur = j.to;
    }
    if (cur >= 0 && k.count(cur) && traj.end_time > t) return true;
    return false;
  };
  long long esc_t = 0, esc_half = 0;
  for (const WalkerPath& w : res.walkers) {
    if (!w.traj.killed) {
      ++undecided;  // horizon reached; counted as non-escape (conservative)
      continue;
    }
    if (!presence_after(w.traj, t_probe)) ++esc_t;
    if (!presence_after(w.traj, 0.5 * t_probe)) ++esc_half;
  }
  if (undecided * 100 > n_walks)
    throw std::runtime_error("escape_rate: too many walks reached the horizon, enlarge it");
  const double p_t = static_cast<double>(esc_t) / n_walks;
  const double p_half = static_cast<double>(esc_half) / n_walks;
  const double e_t = p_t / t_probe;
  const double e_half = p_half / (0.5 * t_probe);
  return 2.0 * e_half - e_t;  // Richardson extrapolation of the t -> 0 limit
}

TiltSpec GeneralSoupSampler::tilt_at(double sigma) const {
  TiltSpec t;
  t.V = cfg_.tilt.V;
  t.lambda0 = cfg_.tilt.lambda0;
  if (!cfg_.tilt.h.empty()) {
    t.h = cfg_.tilt.h;
    for (double& x : t.h) x *= sigma;
  }
  return t;
}

std::vector<double> GeneralSoupSampler::draw_field(double sigma, uint64_t chain_seed) const {
  ChainConfig cc;
  cc.kind = p_.kind == PotentialKind::quadratic ? SamplerKind::heat_bath : SamplerKind::langevin;
  cc.dt = cfg_.field_dt;
  cc.burn_in = cfg_.field_burn_in;
  cc.thinning = 1;
  cc.n_samples = 1;
  cc.seed = chain_seed;
  std::vector<double> field;
  run_chain(cfg_.kill_box, p_, tilt_at(sigma), cc,
            [&](const FieldState& st) { field = st.values; });
  return field;
}

GeneralSoupSampler::GeneralSoupSampler(SoupConfig cfg, Potential p)
    : cfg_(std::move(cfg)), p_(std::move(p)) {
  cfg_.validate(cfg_.kill_box);
  boundary_ = inner_boundary(cfg_.kill_box, cfg_.K);
  const double smax = std::sqrt(2.0 * cfg_.u);
  const int nodes = std::max(cfg_.sigma_nodes, 2);
  sigma_grid_.resize(nodes);
  c_hat_.assign(nodes, 0.0);
  for (int i = 0; i < nodes; ++i) sigma_grid_[i] = smax * i / (nodes - 1);
  // MC estimate of the capacity-like normalizer on each σ node.
  for (int i = 0; i < nodes; ++i) {
    std::mt19937_64 rng = substream(cfg_.seed, 0xca9, i);
    double acc = 0.0;
    for (long long f = 0; f < cfg_.capacity_fields; ++f) {
      const std::vector<double> phi = draw_field(sigma_grid_[i], substream_seed(cfg_.seed, i, f));
      for (long long x : boundary_)
        acc += escape_rate(cfg_.kill_box, p_, tilt_at(sigma_grid_[i]), phi, cfg_.K, x,
                           cfg_.sub_dt, cfg_.escape_walks, cfg_.horizon, rng);
    }
    c_hat_[i] = acc / cfg_.capacity_fields;
    if (!(c_hat_[i] > 0.0))
      throw std::runtime_error("soup: non-positive capacity normalizer estimate");
  }
  // Fine-grid cumulative of (smax - σ) c_hat(σ) with linear interpolation.
  const int fine = 1024;
  sigma_fine_.resize(fine + 1);
  sigma_cum_.assign(fine + 1, 0.0);
  auto c_interp = [&](double s) {
    const double pos = s / smax * (nodes - 1);
    const int j = std::min(static_cast<int>(pos), nodes - 2);
    const double w = pos - j;
    return (1.0 - w) * c_hat_[j] + w * c_hat_[j + 1];
  };
  double cum = 0.0;
  for (int i = 0; i <= fine; ++i) {
    sigma_fine_[i] = smax * i / fine;
    if (i > 0) {
      const double a = sigma_fine_[i - 1], b = sigma_fine_[i];
      const double fa = (smax - a) * c_interp(a), fb = (smax - b) * c_interp(b);
      cum += 0.5 * (fa + fb) * (b - a);
    }
    sigma_cum_[i] = cum;
  }
  intensity_ = cum;
}

SoupSample GeneralSoupSampler::sample(std::mt19937_64& rng) const {
  SoupSample out;
  out.u = cfg_.u;
  out.cap_estimate = cfg_.u > 0.0 ? intensity_ / cfg_.u : 0.0;
  const long long count =
      cfg_.u > 0.0 ? std::poisson_distribution<long long>(intensity_)(rng) : 0;
  const std::unordered_set<long long> k(cfg_.K.begin(), cfg_.K.end());
  const bool freeze = p_.kind == PotentialKind::quadratic;
  long long attempts = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (long long i = 0; i < count; ++i) {
    TrajectoryPair tp;
    // σ by inverse-CDF on the fine grid.
    const double target = unif(rng) * intensity_;
    const size_t j =
        std::lower_bound(sigma_cum_.begin(), sigma_cum_.end(), target) - sigma_cum_.begin();
    tp.sigma = sigma_fine_[std::min(j, sigma_fine_.size() - 1)];
    const TiltSpec tilt = tilt_at(tp.sigma);
    const std::vector<double> phi = draw_field(tp.sigma, rng());
    // Entry site from the estimated escape rates on the inner boundary.
    std::vector<double> cum;
    double total = 0.0;
    for (long long x : boundary_) {
      const double e = std::max(
          escape_rate(cfg_.kill_box, p_, tilt, phi, cfg_.K, x, cfg_.sub_dt, cfg_.escape_walks,
                      cfg_.horizon, rng),
          0.0);
      total += e;
      cum.push_back(total);
    }
    if (total <= 0.0) throw std::runtime_error("soup: all escape-rate estimates vanished");
    const double pick = unif(rng) * total;
    const size_t bi = std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin();
    tp.entry = boundary_[std::min(bi, boundary_.size() - 1)];
    CohortConfig wc;
    wc.horizon = cfg_.horizon;
    wc.sub_dt = cfg_.sub_dt;
    wc.freeze_field = freeze;
    wc.seed = rng();
    FieldState f;
    f.values = phi;
    WalkerPath fwd = simulate_joint(cfg_.kill_box, p_, tilt, 0.0, std::move(f), tp.entry, wc);
    if (!fwd.traj.killed)
      throw std::runtime_error("soup: forward walk survived the horizon; enlarge horizon");
    tp.forward = std::move(fwd.traj);
    BackwardResult bwd = sample_backward(cfg_.kill_box, p_, tilt, phi, tp.entry, k, freeze,
                                         cfg_.horizon, cfg_.sub_dt, cfg_.max_rejection, rng);
    attempts += bwd.attempts;
    tp.backward = std::move(bwd.traj);
    out.trajectories.push_back(std::move(tp));
  }
  out.acceptance_rate = out.trajectories.empty()
                            ? 1.0
                            : static_cast<double>(out.trajectories.size()) /
                                  std::max<long long>(attempts, 1);
  return out;
}

SoupSample sample_general_soup(const SoupConfig& cfg, const Potential& p, std::mt19937_64& rng) {
  return GeneralSoupSampler(cfg, p).sample(rng);
}

OccupationField occupation_field(const SoupSample& s) {
  OccupationField out;
  out.level = s.u;
  for (const TrajectoryPair& tp : s.trajectories) {
    for (const auto& [site, t] : tp.forward.occupation) out.L[site] += t;
    for (const auto& [site, t] : tp.backward.occupation) out.L[site] += t;
  }
  return out;
}

double rescale_occupation(const OccupationField& L, int N, const Domain& dom, const MacroFn& V) {
  const double n2 = 1.0 / (static_cast<double>(N) * N);
  double s = 0.0;
  for (const auto& [site, t] : L.L) s += cell_average(V, dom.coord_of(site), N) * n2 * t;
  return s;
}

double rescale_occupation(const OccupationField& L, const std::vector<double>& v_lattice) {
  double s = 0.0;
  for (const auto& [site, t] : L.L) s += v_lattice[site] * t;
  return s;
}

}  // namespace gibbs
