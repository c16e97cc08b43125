#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace gibbs {

// Deterministic RNG tree: every task derives its own engine from
// (seed, a, b, c) via a splitmix64 chain, so results do not depend on thread
// count or scheduling.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 substream(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t s = seed;
  uint64_t h = splitmix64(s);
  s ^= a * 0x9e3779b97f4a7c15ULL;
  h ^= splitmix64(s);
  s ^= b * 0xc2b2ae3d27d4eb4fULL;
  h ^= splitmix64(s);
  s ^= c * 0x165667b19e3779f9ULL;
  h ^= splitmix64(s);
  std::seed_seq sq{(uint32_t)(h & 0xffffffffu), (uint32_t)(h >> 32),
                   (uint32_t)(s & 0xffffffffu), (uint32_t)(s >> 32)};
  return std::mt19937_64(sq);
}

// A derived 64-bit seed (for handing to nested components that build their
// own substreams), mixed the same way as `substream`.
inline uint64_t substream_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t s = seed;
  uint64_t h = splitmix64(s);
  s ^= a * 0x9e3779b97f4a7c15ULL;
  h ^= splitmix64(s);
  s ^= b * 0xc2b2ae3d27d4eb4fULL;
  h ^= splitmix64(s);
  s ^= c * 0x165667b19e3779f9ULL;
  h ^= splitmix64(s);
  return h;
}

// Runs fn(task) for task in [0, n_tasks). Tasks must write only to their own
// output slots; the caller reduces in task order afterwards, which keeps
// results identical for any thread count.
inline void parallel_for(long long n_tasks, int threads,
                         const std::function<void(long long)>& fn) {
  if (threads < 1) threads = 1;
  if (threads == 1 || n_tasks <= 1) {
    for (long long t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w]() {
      for (long long t = w; t < n_tasks; t += threads) fn(t);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace gibbs
