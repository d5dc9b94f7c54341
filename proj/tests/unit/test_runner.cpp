#include "conecrit/runner.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

using namespace conecrit;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"([geometry]
h = 0.5
a = 1.05

[physics]
eps = 0.3
m = -0.9

[mesh]
target_h = 0.15

[output]
contour_levels = 0

[stage trivial]
start = trivial
ds = 0.1
p_max = 0

[stage b1]
start = switch trivial 1
p_min = -0.9
p_max = 0.9
max_steps = 30

[stage after]
start = hit b1 1
param = h
p_max = 0.6

[stage broken]
start = switch trivial 40

[stage orphan]
start = switch broken 1
)";

fs::path fresh(const std::string& name) {
  const fs::path p = fs::path(CONECRIT_TEST_TMP) / ("runner_" + name);
  fs::remove_all(p);
  return p;
}

RunResult run_tiny(const fs::path& out) {
  std::istringstream is(kTiny);
  Scenario sc = parse_scenario(is, "tiny.ini");
  RunOptions opt;
  opt.output = out;
  return run_scenario(sc, opt);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

const RunResult& tiny_result() {
  static const RunResult res = run_tiny(fresh("tiny"));
  return res;
}

}  // namespace

TEST_SUITE("runner") {
  TEST_CASE("tiny scenario end to end") {
    const RunResult& res = tiny_result();
    const fs::path out = res.directory;
    REQUIRE(res.stages.size() == 5);
    CHECK(res.stage("trivial")->status == "ok");
    CHECK(res.stage("b1")->status == "ok");
    CHECK(res.stage("after")->status == "ok");
    CHECK(res.stage("broken")->status == "failed");
    CHECK(res.stage("orphan")->status == "skipped");
    CHECK_FALSE(res.ok());

    // The trivial branch crosses the first simple branch point below m = 0.
    const Branch& trivial = res.stage("trivial")->branches.at(0);
    CHECK(!trivial.events_of(EventKind::bp).empty());
    CHECK(res.stage("b1")->seeds_found >= 1);

    // Every manifest entry exists and every file is listed.
    std::set<std::string> listed;
    for (const auto& [stage, file] : res.manifest) {
      CHECK_MESSAGE(fs::exists(out / file), file);
      listed.insert(file);
    }
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
      if (entry.is_regular_file()) CHECK_MESSAGE(listed.count(fs::relative(entry.path(), out).generic_string()), entry.path());
    }
    CHECK(listed.count("summary.txt"));
    CHECK(listed.count("manifest.txt"));
    CHECK(listed.count("trivial.csv"));
    CHECK(listed.count("trivial_hit1.sol"));
    CHECK(slurp(out / "summary.txt").find("status skipped") != std::string::npos);
    CHECK_FALSE(fs::exists(out.parent_path() / ".runner_tiny.partial"));
  }

  TEST_CASE("existing output is refused") { CHECK_THROWS_AS(run_tiny(tiny_result().directory), RunError); }

  TEST_CASE("reruns are byte identical") {
    const fs::path out = tiny_result().directory;
    const fs::path again = fresh("tiny_again");
    run_tiny(again);
    CHECK(slurp(out / "trivial.csv") == slurp(again / "trivial.csv"));
    CHECK(slurp(out / "b1.csv") == slurp(again / "b1.csv"));
    CHECK(slurp(out / "summary.txt") == slurp(again / "summary.txt"));
  }

  TEST_CASE("missing output directory") {
    std::istringstream is("[stage s]\nstart = trivial\n");
    const Scenario sc = parse_scenario(is);
    CHECK_THROWS_AS(run_scenario(sc, RunOptions{}), RunError);
  }
}
