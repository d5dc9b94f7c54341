#include "conecrit/scenario.hpp"

#include <doctest.h>

#include <sstream>

using namespace conecrit;

namespace {

Scenario parse(const std::string& text) {
  std::istringstream is(text);
  return parse_scenario(is, "test.ini");
}

int error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ScenarioError& e) {
    return e.line();
  }
  return -1;
}

const char* kFull = R"(# trivial branch and its first offshoot
[geometry]
h = 1
a = 1.05

[physics]
eps = 0.15
m = -0.98

[run]
workers = 2

[mesh]
target_h = 0.045

[output]
directory = out
contour_levels = -0.5 0 0.5

[stage trivial]
kind = branch
start = trivial
param = m
ds = 0.05
p_max = 0

[stage b1]
start = switch trivial 1
seed = all
spectrum = false

[stage folds]
kind = fold-curve
start = event b1#2 fold 1
second = h
direction = -1
p_min = 0.3
)";

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("full scenario") {
    const Scenario sc = parse(kFull);
    CHECK(sc.h == 1.0);
    CHECK(sc.a == 1.05);
    CHECK(sc.eps == 0.15);
    CHECK(sc.m == -0.98);
    CHECK(sc.workers == 2);
    CHECK(sc.mesh.target_h == 0.045);
    CHECK(sc.output.directory == "out");
    CHECK(sc.output.contour_levels == std::vector<double>{-0.5, 0.0, 0.5});
    REQUIRE(sc.stages.size() == 3);

    const StageSpec& t = sc.stages[0];
    CHECK(t.name == "trivial");
    CHECK(t.start.type == StartSpec::Type::trivial);
    CHECK(t.settings.ds == 0.05);
    CHECK(t.settings.p_max == 0.0);
    CHECK(t.settings.targets == std::vector<double>{0.0});

    const StageSpec& b1 = *sc.stage("b1");
    CHECK(b1.start.type == StartSpec::Type::switch_bp);
    CHECK(b1.start.stage == "trivial");
    CHECK(b1.start.k == 1);
    CHECK(b1.seed == 0);
    CHECK_FALSE(b1.spectrum);

    const StageSpec& f = *sc.stage("folds");
    CHECK(f.kind == StageKind::fold_curve);
    CHECK(f.start.type == StartSpec::Type::event);
    CHECK(f.start.branch == 2);
    CHECK(f.start.event == EventKind::fold);
    CHECK(f.second == "h");
    CHECK(f.direction == -1.0);
    CHECK(sc.stage("nope") == nullptr);
  }

  TEST_CASE("defaults") {
    const Scenario sc = parse("[stage s]\nstart = guess t3\nparam = h\n");
    CHECK(sc.h == 1.0);
    CHECK(sc.a == 1.05);
    CHECK(sc.mesh.width_factor == 3.0);
    REQUIRE(sc.stages.size() == 1);
    CHECK(sc.stages[0].start.guess == InterfaceGuess::t3);
    CHECK(sc.stages[0].kind == StageKind::branch);
    CHECK(sc.stages[0].settings.targets.empty());
  }

  TEST_CASE("errors carry line numbers") {
    CHECK(error_line("[geometry]\nh = one\n") == 2);
    CHECK(error_line("[geometry]\nh = 1\nh = 2\n") == 3);
    CHECK(error_line("[geometry]\ncolour = red\n") == 2);
    CHECK(error_line("[nonsense]\n") == 1);
    CHECK(error_line("[stage a]\nstart = switch b 1\n") == 2);
    CHECK(error_line("[stage a]\nstart = trivial\n[stage a]\nstart = trivial\n") == 3);
    CHECK(error_line("[stage a]\nstart = guess t9\n") == 2);
    CHECK(error_line("[stage a]\nstart = trivial\nspectrum = maybe\n") == 3);
    CHECK(error_line("[stage a]\nstart = trivial\n[stage b]\nstart = switch a 1\nh = 2\n") == 5);
    CHECK(error_line("[stage a]\nstart = trivial\n[stage b]\nkind = fold-curve\nstart = event a fold 1\n") > 0);
    CHECK(error_line("h = 1\n") == 1);
    try {
      parse("[geometry]\nh = x\n");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).rfind("test.ini:2:", 0) == 0);
    }
  }

  TEST_CASE("missing file") { CHECK_THROWS(load_scenario("/nonexistent/x.ini")); }
}
