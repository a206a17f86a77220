// Drives the krflab binary: exit codes, file contents and byte determinism.
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "krf/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::path(KRF_TEST_DIR) / "cli";

struct Outcome {
  int code;
  std::string output;
};

Outcome krflab(const std::string& args) {
  fs::create_directories(kDir);
  const fs::path log = kDir / "last.log";
  const std::string cmd = "cd '" + kDir.string() + "' && '" KRFLAB_PATH "' " + args + " > '" + log.string() +
                          "' 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, krf::read_text(log)};
}

void write(const std::string& name, const std::string& text) {
  fs::create_directories(kDir);
  std::ofstream(kDir / name) << text;
}

// Data rows of a CSV as numbers, keyed by column name.
std::vector<std::vector<double>> rows(const fs::path& p, std::vector<std::string>& columns) {
  std::stringstream ss(krf::read_text(p));
  std::string line;
  std::vector<std::vector<double>> out;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    std::string item;
    std::vector<std::string> items;
    while (std::getline(ls, item, ',')) items.push_back(item);
    if (columns.empty()) {
      columns = items;
      continue;
    }
    std::vector<double> v;
    for (const auto& s : items) v.push_back(std::stod(s));
    out.push_back(v);
  }
  return out;
}

std::size_t column(const std::vector<std::string>& cols, const std::string& name) {
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == name) return i;
  }
  FAIL("missing column " << name);
  return 0;
}

}  // namespace

TEST_CASE("config errors exit 2 and name the field") {
  write("bad.cfg", "N=abc\n");
  auto r = krflab("flow --config bad.cfg --out o_bad");
  CHECK(r.code == 2);
  CHECK(r.output.find("'N'") != std::string::npos);
  write("unknown.cfg", "colour=blue\n");
  CHECK(krflab("flow --config unknown.cfg").code == 2);
  CHECK(krflab("flow --config bad.cfg --bogus").code == 2);
  CHECK(krflab("").code == 2);
}

TEST_CASE("missing inputs exit 3") {
  CHECK(krflab("flow --config none.cfg").code == 3);
  write("small.cfg", "N=64\nstep=4e-3\nprofile=round\nterminal=uniform\n");
  CHECK(krflab("heatback --config small.cfg").code == 3);
  CHECK(krflab("heatback --config small.cfg --traj none.json").code == 3);
  CHECK(krflab("entropy --config small.cfg --traj none.json --sol none.csv").code == 3);
}

TEST_CASE("numerical failures exit 4") {
  write("narrow.cfg", "N=64\nstep=4e-3\neps_factor=1e-12\n");
  REQUIRE(krflab("flow --config narrow.cfg --out o_narrow").code == 0);
  const auto r = krflab("heatback --config narrow.cfg --out o_narrow --traj o_narrow/trajectory.json");
  CHECK(r.code == 4);
}

TEST_CASE("round pipeline: constant u, unit mass, vanishing W") {
  write("round.cfg", "N=64\nstep=4e-3\nprofile=round\nterminal=uniform\nexport_stride=5\n");
  REQUIRE(krflab("flow --config round.cfg --out o_round").code == 0);
  REQUIRE(krflab("heatback --config round.cfg --out o_round --traj o_round/trajectory.json").code == 0);
  std::vector<std::string> cols;
  const auto sol = rows(kDir / "o_round/solution.csv", cols);
  REQUIRE(!sol.empty());
  const auto it = column(cols, "t"), iu = column(cols, "u"), im = column(cols, "mass");
  for (const auto& r : sol) {
    CHECK(std::abs(r[im] - 1.0) <= 1e-6);
    CHECK(r[iu] == doctest::Approx(sol.front()[iu] * (1 - sol.front()[it]) / (1 - r[it])).epsilon(1e-10));
  }
  REQUIRE(krflab("entropy --config round.cfg --out o_round --traj o_round/trajectory.json "
                 "--sol o_round/solution.csv").code == 0);
  cols.clear();
  const auto ent = rows(kDir / "o_round/entropy.csv", cols);
  REQUIRE(!ent.empty());
  for (const auto& r : ent) CHECK(std::abs(r[column(cols, "W")]) <= 1e-5);

  write("empty.csv", "# config_hash=x\n# t_i=0.5\nt,theta,u,f,mass\n");
  CHECK(krflab("entropy --config round.cfg --traj o_round/trajectory.json --sol empty.csv").code == 3);
}

TEST_CASE("perturbed pipeline: W column is monotone on the candidate") {
  write("pert.cfg", "N=64\nstep=4e-3\nschedule=0.95,0.99,0.999\nt_max_fraction=0.999\n");
  REQUIRE(krflab("flow --config pert.cfg --out o_pert").code == 0);
  REQUIRE(krflab("heatback --config pert.cfg --out o_pert --traj o_pert/trajectory.json").code == 0);
  REQUIRE(krflab("entropy --config pert.cfg --out o_pert --traj o_pert/trajectory.json "
                 "--sol o_pert/candidate.csv").code == 0);
  std::vector<std::string> cols;
  const auto ent = rows(kDir / "o_pert/entropy.csv", cols);
  REQUIRE(ent.size() > 3);
  const auto iw = column(cols, "W");
  for (std::size_t k = 0; k + 1 < ent.size(); ++k) CHECK(ent[k + 1][iw] >= ent[k][iw] - 1e-7);
}

TEST_CASE("every CSV starts with the config hash and runs are byte identical") {
  write("det.cfg", "N=64\nstep=4e-3\nlgeo_t_i=0.9\nlgeo_times=0,0.3\nn_q=5\nn_bases=3\n");
  for (const char* d : {"o_det1", "o_det2"}) {
    const std::string o = d;
    REQUIRE(krflab("flow --config det.cfg --out " + o).code == 0);
    REQUIRE(krflab("heatback --config det.cfg --out " + o + " --traj " + o + "/trajectory.json").code == 0);
    REQUIRE(krflab("lgeo --config det.cfg --out " + o + " --traj " + o + "/trajectory.json").code == 0);
  }
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(kDir / "o_det1")) {
    const auto name = e.path().filename();
    if (name.extension() == ".csv" || name == "trajectory.json") {
      ++n;
      CHECK(krf::read_text(e.path()) == krf::read_text(kDir / "o_det2" / name));
    }
    if (name.extension() == ".csv") CHECK(krf::read_text(e.path()).rfind("# config_hash=", 0) == 0);
  }
  CHECK(n >= 5);
}
