#include "conecrit/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace conecrit {

ScenarioError::ScenarioError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

const StageSpec* Scenario::stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

namespace {

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string kind;
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

const std::vector<std::string> kParams{"m", "eps", "h", "a"};

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(int line, const std::string& msg) const { throw ScenarioError(source_, line, msg); }

  double number(const Entry& e) const {
    double v = 0.0;
    const std::string s = trim(e.value);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      fail(e.line, "'" + e.key + "' expects a number, got '" + e.value + "'");
    }
    return v;
  }

  int integer(const Entry& e) const {
    int v = 0;
    const std::string s = trim(e.value);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      fail(e.line, "'" + e.key + "' expects an integer, got '" + e.value + "'");
    }
    return v;
  }

  bool boolean(const Entry& e) const {
    const std::string s = trim(e.value);
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    fail(e.line, "'" + e.key + "' expects true or false, got '" + e.value + "'");
  }

  std::vector<double> numbers(const Entry& e) const {
    std::vector<double> out;
    for (const auto& tok : split(e.value)) out.push_back(number(Entry{e.key, tok, e.line}));
    return out;
  }

  std::vector<Section> read(std::istream& is) {
    std::vector<Section> sections;
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
      ++line;
      std::size_t hash = raw.find('#');
      while (hash != std::string::npos && hash > 0 && raw[hash - 1] != ' ' && raw[hash - 1] != '\t') {
        hash = raw.find('#', hash + 1);
      }
      const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']') fail(line, "unterminated section header");
        const auto words = split(text.substr(1, text.size() - 2));
        if (words.empty()) fail(line, "empty section header");
        Section s{words[0], "", line, {}};
        if (s.kind == "stage") {
          if (words.size() != 2) fail(line, "stage header must be [stage NAME]");
          s.name = words[1];
          if (s.name.find('#') != std::string::npos) fail(line, "stage names may not contain '#'");
        } else if (words.size() != 1) {
          fail(line, "unexpected words in section header");
        }
        sections.push_back(std::move(s));
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos) fail(line, "expected 'key = value'");
      if (sections.empty()) fail(line, "key outside of any section");
      Entry e{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line};
      if (e.key.empty()) fail(line, "missing key");
      for (const auto& prev : sections.back().entries) {
        if (prev.key == e.key) fail(line, "duplicate key '" + e.key + "' (first set on line " + std::to_string(prev.line) + ")");
      }
      sections.back().entries.push_back(std::move(e));
    }
    return sections;
  }

  void check_keys(const Section& s, const std::set<std::string>& allowed) const {
    for (const auto& e : s.entries) {
      if (!allowed.count(e.key)) fail(e.line, "unknown key '" + e.key + "' in [" + s.kind + "]");
    }
  }

  StartSpec start(const Entry& e, const Scenario& sc) const {
    const auto w = split(e.value);
    StartSpec st;
    if (w.empty()) fail(e.line, "empty start specification");
    const auto ref = [&](const std::string& token) {
      const auto pos = token.find('#');
      st.stage = token.substr(0, pos);
      if (pos != std::string::npos) st.branch = integer(Entry{e.key, token.substr(pos + 1), e.line});
      if (!sc.stage(st.stage)) fail(e.line, "start refers to '" + st.stage + "', which is not an earlier stage");
      if (st.branch < 1) fail(e.line, "branch numbers start at 1");
    };
    const auto count = [&](const std::string& token) {
      st.k = integer(Entry{e.key, token, e.line});
      if (st.k < 1) fail(e.line, "event and hit numbers start at 1");
    };
    if (w[0] == "trivial" && w.size() == 1) {
      st.type = StartSpec::Type::trivial;
    } else if (w[0] == "guess" && w.size() == 2) {
      st.type = StartSpec::Type::guess;
      if (w[1] == "t1") st.guess = InterfaceGuess::t1;
      else if (w[1] == "t1-long") st.guess = InterfaceGuess::t1_long;
      else if (w[1] == "t3") st.guess = InterfaceGuess::t3;
      else if (w[1] == "winding") st.guess = InterfaceGuess::winding;
      else fail(e.line, "unknown guess '" + w[1] + "' (t1, t1-long, t3, winding)");
    } else if (w[0] == "checkpoint" && w.size() == 2) {
      st.type = StartSpec::Type::checkpoint;
      st.path = w[1];
    } else if (w[0] == "switch" && w.size() == 3) {
      st.type = StartSpec::Type::switch_bp;
      st.event = EventKind::bp;
      ref(w[1]);
      count(w[2]);
    } else if (w[0] == "hit" && w.size() == 3) {
      st.type = StartSpec::Type::hit;
      ref(w[1]);
      count(w[2]);
    } else if (w[0] == "event" && w.size() == 4) {
      st.type = StartSpec::Type::event;
      ref(w[1]);
      if (w[2] == "fold") st.event = EventKind::fold;
      else if (w[2] == "bp") st.event = EventKind::bp;
      else fail(e.line, "event kind must be fold or bp");
      count(w[3]);
    } else {
      fail(e.line, "cannot parse start '" + e.value + "'");
    }
    return st;
  }

  StageSpec stage(const Section& s, const Scenario& sc) const {
    check_keys(s, {"kind", "start", "param", "second", "direction", "seed", "h", "a", "eps", "m", "ds", "ds_min",
                   "ds_max", "max_steps", "p_min", "p_max", "targets", "max_events", "detect_events", "stop_at_cusp",
                   "newton_tol", "newton_max_iter", "event_tol", "tol_eig", "spectrum", "adapt", "relax_steps", "tau",
                   "contours"});
    if (sc.stage(s.name)) fail(s.line, "duplicate stage name '" + s.name + "'");
    StageSpec st;
    st.name = s.name;
    st.line = s.line;
    const Entry* start_entry = nullptr;
    const Entry* param_entry = nullptr;
    const Entry* targets_entry = nullptr;
    std::vector<const Entry*> overrides;
    for (const auto& e : s.entries) {
      const std::string& k = e.key;
      if (k == "kind") {
        if (e.value == "branch") st.kind = StageKind::branch;
        else if (e.value == "fold-curve") st.kind = StageKind::fold_curve;
        else if (e.value == "bp-curve") st.kind = StageKind::bp_curve;
        else fail(e.line, "kind must be branch, fold-curve or bp-curve");
      } else if (k == "start") {
        st.start = start(e, sc);
        start_entry = &e;
      } else if (k == "param") {
        st.param = e.value;
        param_entry = &e;
        if (std::find(kParams.begin(), kParams.end(), st.param) == kParams.end()) fail(e.line, "param must be m, eps, h or a");
      } else if (k == "second") {
        st.second = e.value;
        if (std::find(kParams.begin(), kParams.end(), st.second) == kParams.end()) fail(e.line, "second must be m, eps, h or a");
      } else if (k == "direction") {
        st.direction = number(e);
        if (st.direction != 1.0 && st.direction != -1.0) fail(e.line, "direction must be 1 or -1");
      } else if (k == "seed") {
        st.seed = e.value == "all" ? 0 : integer(e);
        if (st.seed < 0) fail(e.line, "seed must be a positive number or 'all'");
      } else if (k == "h" || k == "a" || k == "eps" || k == "m") {
        const double v = number(e);
        (k == "h" ? st.h : k == "a" ? st.a : k == "eps" ? st.eps : st.m) = v;
        overrides.push_back(&e);
      } else if (k == "ds") {
        st.settings.ds = number(e);
      } else if (k == "ds_min") {
        st.settings.ds_min = number(e);
      } else if (k == "ds_max") {
        st.settings.ds_max = number(e);
      } else if (k == "max_steps") {
        st.settings.max_steps = integer(e);
      } else if (k == "p_min") {
        st.settings.p_min = number(e);
      } else if (k == "p_max") {
        st.settings.p_max = number(e);
      } else if (k == "targets") {
        st.settings.targets = numbers(e);
        targets_entry = &e;
      } else if (k == "max_events") {
        st.settings.max_events = integer(e);
      } else if (k == "detect_events") {
        st.settings.detect_events = boolean(e);
      } else if (k == "stop_at_cusp") {
        st.settings.stop_at_cusp = boolean(e);
      } else if (k == "newton_tol") {
        st.settings.newton.tol = number(e);
      } else if (k == "newton_max_iter") {
        st.settings.newton.max_iter = integer(e);
      } else if (k == "event_tol") {
        st.settings.event_tol = number(e);
      } else if (k == "tol_eig") {
        st.settings.tol_eig = number(e);
      } else if (k == "spectrum") {
        st.spectrum = boolean(e);
      } else if (k == "adapt") {
        st.adapt = boolean(e);
      } else if (k == "relax_steps") {
        st.relax_steps = integer(e);
      } else if (k == "tau") {
        st.tau = number(e);
      } else if (k == "contours") {
        st.contours = boolean(e);
      }
    }
    if (!start_entry) fail(s.line, "stage '" + s.name + "' has no start");
    if (!(st.settings.ds > 0.0) || !(st.settings.ds_min > 0.0) || st.settings.ds_min > st.settings.ds_max) {
      fail(s.line, "step sizes must satisfy 0 < ds_min <= ds_max and ds > 0");
    }
    if (st.settings.p_min >= st.settings.p_max) fail(s.line, "p_min must be below p_max");

    using T = StartSpec::Type;
    const bool derived = st.start.type == T::switch_bp || st.start.type == T::hit || st.start.type == T::event;
    if (derived && !overrides.empty()) {
      fail(overrides.front()->line, "parameters come from the start point and cannot be overridden here");
    }
    if (derived) {
      const StageSpec* parent = sc.stage(st.start.stage);
      if (parent->kind != StageKind::branch) fail(start_entry->line, "start must refer to a branch stage");
      const bool inherits = st.start.type != T::hit;
      if (inherits) {
        if (param_entry && st.param != parent->param) {
          fail(param_entry->line, "param must match the parent branch ('" + parent->param + "')");
        }
        st.param = parent->param;
      }
    }
    if (st.kind == StageKind::branch) {
      if (st.start.type == T::event) fail(start_entry->line, "branch stages start from trivial, guess, checkpoint, switch or hit");
      if (!targets_entry && st.param == "m") st.settings.targets = {0.0};
    } else {
      const EventKind need = st.kind == StageKind::fold_curve ? EventKind::fold : EventKind::bp;
      if (st.start.type != T::event || st.start.event != need) {
        fail(start_entry->line, std::string("curve stages start from 'event <stage> ") +
                                    (need == EventKind::fold ? "fold" : "bp") + " <k>'");
      }
      if (st.second.empty()) fail(s.line, "curve stages need 'second'");
      if (st.second == st.param) fail(s.line, "second must differ from the branch parameter");
    }
    return st;
  }

  Scenario build(const std::vector<Section>& sections) const {
    Scenario sc;
    sc.source = source_;
    std::set<std::string> seen;
    for (const auto& s : sections) {
      if (s.kind != "stage") {
        if (seen.count(s.kind)) fail(s.line, "duplicate section [" + s.kind + "]");
        seen.insert(s.kind);
      }
      if (s.kind == "geometry") {
        check_keys(s, {"h", "a"});
        for (const auto& e : s.entries) {
          (e.key == "h" ? sc.h : sc.a) = number(e);
        }
        if (!(sc.h >= 0.0)) fail(s.line, "h must be non-negative");
        if (!(sc.a >= 1.0)) fail(s.line, "a must be at least 1");
      } else if (s.kind == "physics") {
        check_keys(s, {"eps", "m"});
        for (const auto& e : s.entries) {
          (e.key == "eps" ? sc.eps : sc.m) = number(e);
        }
        if (!(sc.eps > 0.0)) fail(s.line, "eps must be positive");
      } else if (s.kind == "run") {
        check_keys(s, {"workers"});
        for (const auto& e : s.entries) {
          sc.workers = integer(e);
          if (sc.workers < 1) fail(e.line, "workers must be positive");
        }
      } else if (s.kind == "mesh") {
        check_keys(s, {"target_h", "element_cap", "file", "width_factor", "band", "max_rounds"});
        for (const auto& e : s.entries) {
          if (e.key == "target_h") sc.mesh.target_h = number(e);
          else if (e.key == "element_cap") sc.mesh.element_cap = static_cast<std::size_t>(integer(e));
          else if (e.key == "file") sc.mesh.file = e.value;
          else if (e.key == "width_factor") sc.mesh.width_factor = number(e);
          else if (e.key == "band") sc.mesh.band = number(e);
          else sc.mesh.max_rounds = integer(e);
        }
        if (!(sc.mesh.target_h > 0.0)) fail(s.line, "target_h must be positive");
      } else if (s.kind == "output") {
        check_keys(s, {"directory", "contour_levels"});
        for (const auto& e : s.entries) {
          if (e.key == "directory") sc.output.directory = e.value;
          else sc.output.contour_levels = numbers(e);
        }
      } else if (s.kind == "stage") {
        sc.stages.push_back(stage(s, sc));
      } else {
        fail(s.line, "unknown section [" + s.kind + "]");
      }
    }
    if (sc.stages.empty()) fail(sections.empty() ? 1 : sections.back().line, "scenario defines no stages");
    return sc;
  }

 private:
  std::string source_;
};

}  // namespace

Scenario parse_scenario(std::istream& is, const std::string& source) {
  Parser parser(source);
  return parser.build(parser.read(is));
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ScenarioError(path.string(), 0, "cannot open scenario file");
  Scenario sc = parse_scenario(is, path.string());
  sc.base_dir = path.parent_path();
  return sc;
}

}  // namespace conecrit
