// Acceptance suite: criteria 1-11 at the default configuration. Prints one
// PASS/FAIL line per criterion; exits nonzero if any fails.
//
//   acceptance [config] [out_dir]

#include <cstdio>
#include <exception>
#include <string>

#include "krf/config.hpp"
#include "krf/recipes.hpp"

int main(int argc, char** argv) {
  try {
    krf::ExperimentConfig cfg = argc > 1 && std::string(argv[1]) != "-" ? krf::load_config(argv[1])
                                                                         : krf::ExperimentConfig{};
    cfg.out_dir = argc > 2 ? argv[2] : "acceptance_out";
    const auto m = krf::cmd_acceptance(cfg);
    for (const auto& c : m.checks) {
      std::printf("criterion %2d %-38s %s  %s\n", c.id, c.name.c_str(), c.pass ? "PASS" : "FAIL",
                  c.detail.c_str());
    }
    std::printf("%zu criteria, %s, %.1f s, config_hash=%s\n", m.checks.size(),
                m.all_pass() ? "all pass" : "FAILURES", m.wall_seconds, m.config_hash.c_str());
    return m.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
}
