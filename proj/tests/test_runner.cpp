#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "gibbs/lattice.hpp"
#include "gibbs/runner.hpp"
#include "json.hpp"

using namespace gibbs;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("gibbs_runner_" + tag);
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("config json round trip and canonical hashing") {
  const std::string text = R"({
    "experiment": "field",
    "seed": 99,
    "threads": 4,
    "output_dir": "somewhere",
    "domain": {"side": 7, "boundary": "periodic"},
    "potential": {"kind": "cosine", "amplitude": 0.4},
    "tilt": {"sites": [[0, 0, 0]], "v_values": [0.02], "couple_h_to_v": true},
    "chain": {"kind": "langevin", "dt": 0.002, "burn_in": 50, "thinning": 2,
              "n_samples": 400, "mass": 0.5},
    "walk": {"horizon": 8.0, "walkers": 32},
    "soup": {"u": 0.25},
    "ladder": {"Ns": [4, 8], "extent": 1.5},
    "observables": [[0, 0, 0], [1, 0, 0]]
  })";
  RunConfig cfg = RunConfig::from_json_text(text);
  CHECK(cfg.experiment == "field");
  CHECK(cfg.seed == 99);
  CHECK(cfg.threads == 4);
  CHECK(cfg.output_dir == "somewhere");
  CHECK(cfg.domain.side == 7);
  CHECK(cfg.domain.boundary == "periodic");
  CHECK(cfg.potential.kind == "cosine");
  CHECK(cfg.potential.amplitude == 0.4);
  CHECK(cfg.tilt.sites.size() == 1);
  CHECK(cfg.tilt.v_values == std::vector<double>{0.02});
  CHECK(cfg.tilt.couple_h_to_v);
  CHECK(cfg.chain.kind == "langevin");
  CHECK(cfg.chain.dt == 0.002);
  CHECK(cfg.chain.n_samples == 400);
  CHECK(cfg.chain.mass == 0.5);
  CHECK(cfg.walk.horizon == 8.0);
  CHECK(cfg.walk.walkers == 32);
  CHECK(cfg.soup.u == 0.25);
  CHECK(cfg.ladder.Ns == std::vector<int>{4, 8});
  CHECK(cfg.observables.size() == 2);
  // Unspecified keys keep their defaults.
  CHECK(cfg.walk.sub_dt == 0.02);
  CHECK(cfg.soup.n_soups == 2000);

  // The canonical dump ignores output_dir and threads, nothing else.
  RunConfig a = cfg;
  RunConfig b = cfg;
  b.output_dir = "elsewhere";
  b.threads = 16;
  CHECK(a.canonical_json() == b.canonical_json());
  CHECK(fnv1a_hex(a.canonical_json()) == fnv1a_hex(b.canonical_json()));
  RunConfig c = cfg;
  c.seed = 100;
  CHECK(a.canonical_json() != c.canonical_json());
}

TEST_CASE("validation collects every violation at once") {
  RunConfig cfg;
  cfg.experiment = "banana";
  cfg.domain.dim = 2;
  std::vector<std::string> bad = validate(cfg);
  REQUIRE(bad.size() >= 2);
  const auto mentions = [&bad](const std::string& needle) {
    return std::any_of(bad.begin(), bad.end(), [&needle](const std::string& msg) {
      return msg.find(needle) != std::string::npos;
    });
  };
  CHECK(mentions("unknown experiment"));
  CHECK(mentions("domain.dim"));

  RunConfig ok;  // default green experiment on a small dirichlet box
  CHECK(validate(ok).empty());

  RunConfig boundary = ok;
  boundary.domain.boundary = "open";
  CHECK_FALSE(validate(boundary).empty());

  RunConfig pot = ok;
  pot.potential.kind = "banana";
  CHECK_FALSE(validate(pot).empty());

  RunConfig ladder = ok;
  ladder.experiment = "scaling";
  ladder.ladder.Ns = {8, 8};
  std::vector<std::string> rungs = validate(ladder);
  CHECK(std::any_of(rungs.begin(), rungs.end(), [](const std::string& msg) {
    return msg.find("ladder.Ns") != std::string::npos;
  }));
}

TEST_CASE("green experiment writes a deterministic report") {
  TempDir t1("a"), t2("b");
  RunConfig cfg;
  cfg.experiment = "green";
  cfg.seed = 7;
  cfg.output_dir = t1.path.string();

  RunOutcome first = run(cfg);
  CHECK(first.all_pass);
  REQUIRE_FALSE(first.checks.empty());
  for (const CheckResult& c : first.checks) {
    CHECK(c.pass);
    CHECK_FALSE(c.name.empty());
  }
  REQUIRE(std::filesystem::exists(first.report_path));
  REQUIRE(std::filesystem::exists(first.manifest_path));

  const std::string report_text = slurp(first.report_path);
  json report = json::parse(report_text);
  CHECK(report["experiment"] == "green");
  CHECK(report["seed"] == 7);
  CHECK(report.contains("results"));
  CHECK(report.contains("checks"));

  json manifest = json::parse(slurp(first.manifest_path));
  CHECK(manifest["config_hash"] == report["config_hash"]);
  CHECK(manifest.contains("code_version"));
  bool found_report = false;
  for (const auto& art : manifest["artifacts"]) {
    if (art["name"] == "report.json") {
      found_report = true;
      CHECK(art["fnv1a"] == fnv1a_hex(report_text));
      CHECK(art["bytes"] == report_text.size());
    }
  }
  CHECK(found_report);

  // Same config, different output directory: identical report and CSVs.
  RunConfig cfg2 = cfg;
  cfg2.output_dir = t2.path.string();
  RunOutcome second = run(cfg2);
  CHECK(slurp(second.report_path) == report_text);
  REQUIRE(first.artifact_paths.size() == second.artifact_paths.size());
  for (size_t i = 1; i < first.artifact_paths.size(); ++i)
    CHECK(slurp(first.artifact_paths[i]) == slurp(second.artifact_paths[i]));
  json manifest2 = json::parse(slurp(second.manifest_path));
  CHECK(manifest2["config_hash"] == manifest["config_hash"]);

  RunConfig broken = cfg;
  broken.domain.dim = 2;
  CHECK_THROWS_AS((void)run(broken), std::invalid_argument);
}

TEST_CASE("criterion registry has twelve labelled entries") {
  CHECK(criterion_count() == 12);
  std::set<std::string> labels;
  for (int i = 1; i <= criterion_count(); ++i) {
    std::string label = criterion_label(i);
    CHECK_FALSE(label.empty());
    labels.insert(label);
  }
  CHECK(labels.size() == 12);
  CHECK_THROWS_AS((void)run_criterion(0, 1, 1), std::out_of_range);
  CHECK_THROWS_AS((void)run_criterion(13, 1, 1), std::out_of_range);
}

TEST_CASE("tilt section builds explicit sites and centered bumps") {
  Domain dom = Domain::centered(3, 9, Boundary::dirichlet);

  TiltConfig none;
  TiltSpec empty = none.build(dom);
  CHECK(empty.V.empty());
  CHECK(empty.h.empty());

  TiltConfig explicit_cfg;
  explicit_cfg.sites = {{0, 0, 0}, {1, 0, 0}};
  explicit_cfg.v_values = {0.04, 0.03};
  explicit_cfg.h_values = {0.01, 0.02};
  TiltSpec spec = explicit_cfg.build(dom);
  REQUIRE(spec.V.size() == static_cast<size_t>(dom.volume()));
  CHECK(spec.V[dom.index_of({0, 0, 0})] == 0.04);
  CHECK(spec.V[dom.index_of({1, 0, 0})] == 0.03);
  CHECK(spec.h[dom.index_of({1, 0, 0})] == 0.02);

  TiltConfig coupled = explicit_cfg;
  coupled.h_values.clear();
  coupled.couple_h_to_v = true;
  TiltSpec both = coupled.build(dom);
  CHECK(both.h == both.V);

  TiltConfig bump;
  bump.lambda = 0.01;
  bump.L = 0.5;
  bump.N = 1;
  TiltSpec smooth = bump.build(dom);
  REQUIRE(smooth.V.size() == static_cast<size_t>(dom.volume()));
  CHECK(smooth.V[dom.index_of({0, 0, 0})] > 0.0);
  CHECK(smooth.admissibility_product(dom) <= 4.0 * bump.lambda + 1e-12);
}

TEST_CASE("fnv1a reference vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("ab") != fnv1a_hex("ba"));
}

}  // TEST_SUITE
