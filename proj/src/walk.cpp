#include "gibbs/walk.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "gibbs/rng.hpp"

namespace gibbs {

double edge_conductance(const Potential& u, const std::vector<double>& phi, long long x,
                        double phi_neighbor) {
  return u.u_second(phi[x] - phi_neighbor);
}

namespace {

struct WalkerState {
  long long site = -1;
  std::vector<long long> coords;  // unwrapped
  double entry_time = 0.0;
  double next_candidate = 0.0;
  bool alive = true;
  bool halted = false;  // stopped or killed
  size_t ck_idx = 0;
  std::mt19937_64 rng;
};

void flush_occupation(JointTrajectory& traj, WalkerState& w, double until) {
  if (until > w.entry_time) {
    traj.occupation[w.site] += until - w.entry_time;
    w.entry_time = until;
  }
}

void record_checkpoints_until(const CohortConfig& cfg, WalkerPath& path, WalkerState& w,
                              double until_exclusive) {
  while (w.ck_idx < cfg.checkpoints.size() && cfg.checkpoints[w.ck_idx] < until_exclusive) {
    std::array<long long, 3> c{0, 0, 0};
    for (size_t a = 0; a < w.coords.size() && a < 3; ++a) c[a] = w.coords[a];
    path.checkpoint_coords.push_back(c);
    ++w.ck_idx;
  }
}

}  // namespace

CohortResult simulate_cohort(const Domain& dom, const Potential& u, const TiltSpec& tilt,
                             double mass, FieldState field, const std::vector<long long>& starts,
                             const CohortConfig& cfg) {
  if (starts.empty()) throw std::invalid_argument("simulate_cohort: no walkers");
  const long long n = dom.volume();
  if (field.values.empty()) field.values.assign(n, 0.0);
  if (static_cast<long long>(field.values.size()) != n)
    throw std::invalid_argument("simulate_cohort: field size mismatch");
  if (cfg.horizon < 0.0 || cfg.sub_dt <= 0.0)
    throw std::invalid_argument("simulate_cohort: bad time parameters");
  const double rate = cfg.rate_cap > 0.0 ? cfg.rate_cap : 2.0 * dom.dim * u.c2;
  std::unordered_set<long long> stop_set(cfg.stop_sites.begin(), cfg.stop_sites.end());
  if (!std::is_sorted(cfg.checkpoints.begin(), cfg.checkpoints.end()))
    throw std::invalid_argument("simulate_cohort: checkpoints must be sorted");

  std::mt19937_64 field_rng = substream(cfg.seed, 0xf0f0);
  CohortResult res;
  res.walkers.resize(starts.size());
  std::vector<WalkerState> ws(starts.size());
  for (size_t i = 0; i < starts.size(); ++i) {
    const long long s = starts[i];
    if (s < 0 || s >= n) throw std::invalid_argument("simulate_cohort: start outside domain");
    WalkerState& w = ws[i];
    w.site = s;
    const Coord c = dom.coord_of(s);
    w.coords.assign(c.begin(), c.end());
    w.rng = substream(cfg.seed, 0x3a1c, i);
    w.next_candidate = std::exponential_distribution<double>(rate)(w.rng);
    JointTrajectory& traj = res.walkers[i].traj;
    traj.start = s;
    traj.final_site = s;
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<long long> nbr = neighbor_table(dom);
  const int deg = 2 * dom.dim;
  // A frozen environment needs no sub-interval grid.
  const double step = cfg.freeze_field ? cfg.horizon : cfg.sub_dt;
  size_t active = ws.size();
  double t = 0.0;
  while (t < cfg.horizon && active > 0) {
    const double t_end = std::min(t + step, cfg.horizon);
    for (size_t i = 0; i < ws.size(); ++i) {
      WalkerState& w = ws[i];
      if (w.halted) continue;
      JointTrajectory& traj = res.walkers[i].traj;
      while (w.next_candidate < t_end && !w.halted) {
        const double ev = w.next_candidate;
        record_checkpoints_until(cfg, res.walkers[i], w, ev);
        // Evaluate the 2d conductances in the current environment. Table slot
        // k holds the neighbor along axis k/2 in direction -1 (k even) or +1
        // (k odd); -1 marks the dirichlet exterior.
        double target = unit(w.rng) * rate;
        bool jumped = false;
        long long chosen_site = -1;
        int chosen_k = 0;
        const double px = field.values[w.site];
        for (int k = 0; k < deg && !jumped; ++k) {
          const long long y = nbr[deg * w.site + k];
          const double pn = y < 0 ? 0.0 : field.values[y];
          const double a = u.u_second(px - pn);
          if (target < a) {
            jumped = true;
            chosen_site = y;
            chosen_k = k;
          } else {
            target -= a;
          }
        }
        if (jumped) {
          flush_occupation(traj, w, ev);
          traj.jumps.push_back({ev, w.site, chosen_site});
          if (chosen_site < 0) {
            traj.killed = true;
            traj.end_time = ev;
            w.halted = true;
            w.alive = false;
            --active;
          } else {
            w.site = chosen_site;
            w.coords[chosen_k / 2] += (chosen_k % 2) ? 1 : -1;
            traj.final_site = w.site;
            if (stop_set.count(w.site)) {
              traj.stopped = true;
              traj.end_time = ev;
              w.halted = true;
              --active;
            }
          }
        }
        w.next_candidate = ev + std::exponential_distribution<double>(rate)(w.rng);
      }
    }
    if (!cfg.freeze_field && t_end > t)
      langevin_step(dom, nbr, u, field, tilt, mass, t_end - t, field_rng);
    t = t_end;
  }
  for (size_t i = 0; i < ws.size(); ++i) {
    WalkerState& w = ws[i];
    JointTrajectory& traj = res.walkers[i].traj;
    if (!w.halted) {
      flush_occupation(traj, w, cfg.horizon);
      traj.end_time = cfg.horizon;
    }
    record_checkpoints_until(cfg, res.walkers[i], w, infinite_time());
    while (res.walkers[i].checkpoint_coords.size() < cfg.checkpoints.size()) {
      std::array<long long, 3> c{0, 0, 0};
      for (size_t a = 0; a < w.coords.size() && a < 3; ++a) c[a] = w.coords[a];
      res.walkers[i].checkpoint_coords.push_back(c);
    }
  }
  res.final_field = std::move(field);
  return res;
}

WalkerPath simulate_joint(const Domain& dom, const Potential& u, const TiltSpec& tilt, double mass,
                          FieldState field, long long start, const CohortConfig& cfg) {
  CohortResult res = simulate_cohort(dom, u, tilt, mass, std::move(field), {start}, cfg);
  return std::move(res.walkers.front());
}

double feynman_kac_weight(const JointTrajectory& traj, const std::vector<double>& V) {
  if (V.empty()) return 1.0;
  double s = 0.0;
  for (const auto& [site, time] : traj.occupation) s += V[site] * time;
  return std::exp(s);
}

double occupation_time(const JointTrajectory& traj, long long site) {
  auto it = traj.occupation.find(site);
  return it == traj.occupation.end() ? 0.0 : it->second;
}

double hitting_time(const JointTrajectory& traj, const std::vector<long long>& K) {
  std::unordered_set<long long> k(K.begin(), K.end());
  if (k.count(traj.start)) return 0.0;
  for (const JumpRecord& j : traj.jumps)
    if (j.to >= 0 && k.count(j.to)) return j.time;
  return infinite_time();
}

}  // namespace gibbs
