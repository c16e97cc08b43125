// Acceptance harness: runs the numbered verification criteria and prints one
// pass/fail line per criterion. Exit code 0 iff every requested criterion
// passed.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>

#include "gibbs/runner.hpp"

int main(int argc, char** argv) {
  int only = 0;
  uint64_t seed = 20260815ULL;
  int threads = 1;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      seed = std::strtoull(argv[++i], nullptr, 10);
    } else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
      threads = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N] [--seed S] [--threads T]\n");
      return 2;
    }
  }
  if (only != 0 && (only < 1 || only > gibbs::criterion_count())) {
    std::fprintf(stderr, "criterion must be in 1..%d\n", gibbs::criterion_count());
    return 2;
  }

  const int first = only != 0 ? only : 1;
  const int last = only != 0 ? only : gibbs::criterion_count();
  bool all_pass = true;
  for (int k = first; k <= last; ++k) {
    gibbs::CheckResult r;
    try {
      r = gibbs::run_criterion(k, seed, threads);
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    all_pass = all_pass && r.pass;
    std::printf("[%s] criterion %d: %s\n", r.pass ? "PASS" : "FAIL", k,
                gibbs::criterion_label(k).c_str());
    if (!r.detail.empty()) std::printf("       %s\n", r.detail.c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
