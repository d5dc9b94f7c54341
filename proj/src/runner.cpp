#include "conecrit/runner.hpp"

#include "conecrit/checkpoint.hpp"
#include "conecrit/fem_problem.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace conecrit {

namespace fs = std::filesystem;

bool RunResult::ok() const {
  for (const auto& s : stages) {
    if (s.status != "ok") return false;
  }
  return true;
}

const StageResult* RunResult::stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

namespace {

struct Start {
  std::shared_ptr<const Mesh> mesh;
  Eigen::VectorXd x;
  Params params;
};

std::string format_params(const Params& p) {
  std::ostringstream os;
  os << std::setprecision(8) << "m=" << p[0] << " eps=" << p[1] << " h=" << p[2] << " a=" << p[3];
  return os.str();
}

class Runner {
 public:
  Runner(const Scenario& sc, const RunOptions& opt) : sc_(sc), opt_(opt) {
    workers_ = opt.workers > 0 ? opt.workers : sc.workers;
  }

  RunResult run() {
    fs::path out = opt_.output;
    if (out.empty()) out = sc_.output.directory;
    if (out.empty()) throw RunError("no output directory: set [output] directory or pass --output");
    if (fs::exists(out)) throw RunError("output directory already exists: " + out.string());
    const fs::path parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
    fs::create_directories(parent);
    dir_ = parent / ("." + out.filename().string() + ".partial");
    fs::remove_all(dir_);
    fs::create_directories(dir_);

    if (sc_.mesh.file.empty()) {
      base_mesh_ = std::make_shared<const Mesh>(generate_disk_mesh(sc_.mesh.target_h, sc_.mesh.element_cap));
    } else {
      base_mesh_ = std::make_shared<const Mesh>(load_mesh((sc_.base_dir / sc_.mesh.file).string()));
    }
    log() << "mesh: " << base_mesh_->node_count() << " nodes, " << base_mesh_->triangle_count() << " triangles\n";

    for (const auto& spec : sc_.stages) {
      StageResult res;
      res.name = spec.name;
      const std::string blocked = blocking_stage(spec);
      if (!blocked.empty()) {
        res.status = "skipped";
        res.message = "depends on stage '" + blocked + "', which did not complete";
      } else {
        log() << "stage " << spec.name << "\n";
        try {
          run_stage(spec, res);
          res.status = "ok";
        } catch (const std::exception& e) {
          res.status = "failed";
          res.message = e.what();
        }
      }
      log() << "stage " << spec.name << ": " << res.status << (res.message.empty() ? "" : " (" + res.message + ")")
            << "\n";
      result_.stages.push_back(std::move(res));
    }

    write_summary();
    result_.manifest.emplace_back("-", "manifest.txt");
    {
      std::ofstream os(dir_ / "manifest.txt");
      for (const auto& [stage, file] : result_.manifest) os << stage << '\t' << file << '\n';
    }
    fs::rename(dir_, out);
    result_.directory = out;
    return std::move(result_);
  }

 private:
  std::ostream& log() {
    static std::ostream null(nullptr);
    return opt_.log ? *opt_.log : null;
  }

  void add(const std::string& stage, const std::string& relative) { result_.manifest.emplace_back(stage, relative); }

  std::string blocking_stage(const StageSpec& spec) const {
    using T = StartSpec::Type;
    if (spec.start.type == T::switch_bp || spec.start.type == T::hit || spec.start.type == T::event) {
      const StageResult* dep = result_.stage(spec.start.stage);
      if (!dep || dep->status != "ok") return spec.start.stage;
    }
    return "";
  }

  std::unique_ptr<FemProblem> problem(const StageSpec& spec, std::shared_ptr<const Mesh> mesh, const Params& p,
                                      const std::string& active) const {
    auto prob = std::make_unique<FemProblem>(std::move(mesh), ConeParams{p[2], p[3]}, p[0], p[1], workers_);
    prob->params = p;
    prob->active = prob->parameter_index(active);
    prob->compute_spectrum = spec.spectrum;
    prob->adapt_settings.enabled = spec.adapt;
    prob->adapt_settings.width_factor = sc_.mesh.width_factor;
    prob->adapt_settings.band = sc_.mesh.band;
    prob->adapt_settings.max_rounds = sc_.mesh.max_rounds;
    prob->adapt_settings.element_cap = sc_.mesh.element_cap;
    return prob;
  }

  Params base_params(const StageSpec& spec) const {
    return {spec.m.value_or(sc_.m), spec.eps.value_or(sc_.eps), spec.h.value_or(sc_.h), spec.a.value_or(sc_.a)};
  }

  const Branch& parent_branch(const StartSpec& st) const {
    const StageResult* dep = result_.stage(st.stage);
    if (st.branch > static_cast<int>(dep->branches.size())) {
      throw RunError("stage '" + st.stage + "' has " + std::to_string(dep->branches.size()) + " branch(es), not " +
                     std::to_string(st.branch));
    }
    return dep->branches[static_cast<std::size_t>(st.branch - 1)];
  }

  const BranchPointRecord& parent_event(const StartSpec& st) const {
    const auto events = parent_branch(st).events_of(st.event);
    if (st.k > static_cast<int>(events.size())) {
      throw RunError("stage '" + st.stage + "' has " + std::to_string(events.size()) + " " + to_string(st.event) +
                     " event(s), not " + std::to_string(st.k));
    }
    return *events[static_cast<std::size_t>(st.k - 1)];
  }

  static std::shared_ptr<const Mesh> mesh_of(const BranchPoint& pt) {
    auto mesh = std::static_pointer_cast<const Mesh>(pt.context);
    if (!mesh) throw RunError("start point carries no mesh");
    return mesh;
  }

  std::vector<BranchSeed> starts(const StageSpec& spec, StageResult& res) {
    using T = StartSpec::Type;
    const StartSpec& st = spec.start;
    switch (st.type) {
      case T::trivial: {
        const Params p = base_params(spec);
        auto prob = problem(spec, base_mesh_, p, spec.param);
        const double m = p[0];
        const Eigen::VectorXd x = prob->pack(Eigen::VectorXd::Constant(base_mesh_->node_count(), m), m * m * m - m);
        return {seed_from(spec, *prob, x, p)};
      }
      case T::guess: {
        const Params p = base_params(spec);
        auto prob = problem(spec, base_mesh_, p, spec.param);
        const Eigen::VectorXd u = interface_guess(*base_mesh_, ConeParams{p[2], p[3]}, p[1], st.guess);
        NewtonSettings newton = spec.settings.newton;
        newton.max_iter = std::max(newton.max_iter, 50);
        const Eigen::VectorXd x = converge_from_guess(*prob, u, spec.relax_steps, spec.tau, newton);
        return {seed_from(spec, *prob, x, p)};
      }
      case T::checkpoint: {
        const Solution s = load_solution(sc_.base_dir / st.path);
        Params p{s.m, s.eps, s.h, s.a};
        if (spec.m) p[0] = *spec.m;
        if (spec.eps) p[1] = *spec.eps;
        if (spec.h) p[2] = *spec.h;
        if (spec.a) p[3] = *spec.a;
        auto prob = problem(spec, s.mesh, p, spec.param);
        return {seed_from(spec, *prob, prob->pack(s.u, s.lambda), p)};
      }
      case T::switch_bp: {
        const Branch& parent = parent_branch(st);
        const BranchPointRecord& bp = parent_event(st);
        auto prob = problem(spec, mesh_of(bp.point), bp.point.params, spec.param);
        SwitchSettings sw;
        sw.ds = spec.settings.ds;
        sw.newton = spec.settings.newton;
        auto seeds = switch_branch(*prob, bp, parent, sw);
        res.seeds_found = seeds.size();
        if (spec.seed == 0) return seeds;
        if (spec.seed > static_cast<int>(seeds.size())) {
          throw RunError("branch switching produced " + std::to_string(seeds.size()) + " seed(s), not " +
                         std::to_string(spec.seed));
        }
        return {seeds[static_cast<std::size_t>(spec.seed - 1)]};
      }
      case T::hit: {
        const Branch& parent = parent_branch(st);
        if (st.k > static_cast<int>(parent.hits.size())) {
          throw RunError("stage '" + st.stage + "' has " + std::to_string(parent.hits.size()) + " hit(s), not " +
                         std::to_string(st.k));
        }
        const BranchPoint& pt = parent.hits[static_cast<std::size_t>(st.k - 1)];
        auto prob = problem(spec, mesh_of(pt), pt.params, spec.param);
        return {seed_from(spec, *prob, pt.x, pt.params)};
      }
      case T::event:
        break;
    }
    throw RunError("unsupported start for a branch stage");
  }

  BranchSeed seed_from(const StageSpec& spec, FemProblem& prob, Eigen::VectorXd x, const Params& p) {
    if (spec.adapt && prob.adapt(x, p)) {
      x = newton_correct(prob, x, p[static_cast<std::size_t>(prob.active)], spec.settings.newton).x;
    }
    seed_meshes_.push_back(prob.mesh());
    return BranchSeed{x, p, parameter_direction(prob, spec.direction)};
  }

  void run_stage(const StageSpec& spec, StageResult& res) {
    if (spec.kind != StageKind::branch) {
      run_curve(spec, res);
      return;
    }
    seed_meshes_.clear();
    const auto seeds = starts(spec, res);
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      const BranchSeed& seed = seeds[j];
      auto prob = problem(spec, seed_meshes_.empty() ? mesh_for_seed(spec) : seed_meshes_.at(j), seed.params,
                          spec.param);
      Branch br = continue_branch(*prob, seed.x, seed.direction, spec.settings);
      log() << "  branch " << j + 1 << ": " << br.points.size() << " points, " << br.events.size()
            << " events, stop: " << br.stop_reason << "\n";
      const std::string stem = seeds.size() > 1 ? spec.name + "_" + std::to_string(j + 1) : spec.name;
      write_branch(spec, stem, br, res);
      res.branches.push_back(std::move(br));
    }
  }

  // Seeds from branch switching live on the mesh of the branch point.
  std::shared_ptr<const Mesh> mesh_for_seed(const StageSpec& spec) const {
    return mesh_of(parent_event(spec.start).point);
  }

  void run_curve(const StageSpec& spec, StageResult& res) {
    const BranchPointRecord& rec = parent_event(spec.start);
    auto prob = problem(spec, mesh_of(rec.point), rec.point.params, spec.param);
    // Extended systems are tracked without spectra or remeshing.
    prob->compute_spectrum = false;
    prob->adapt_settings.enabled = false;
    ContinuationSettings settings = spec.settings;
    settings.detect_events = true;
    Branch br = spec.kind == StageKind::fold_curve
                    ? fold_continue(*prob, rec, spec.second, settings, spec.direction)
                    : bp_continue(*prob, rec, spec.second, settings, spec.direction);
    log() << "  curve: " << br.points.size() << " points, stop: " << br.stop_reason << "\n";
    save_branch_csv((dir_ / (spec.name + ".csv")).string(), br);
    add(spec.name, spec.name + ".csv");
    res.hits.emplace_back();
    res.branches.push_back(std::move(br));
  }

  std::string mesh_file(const std::shared_ptr<const Mesh>& mesh, const std::string& stage) {
    for (const auto& [ptr, name] : meshes_) {
      if (ptr == mesh) return name;
    }
    const std::string name = "mesh_" + std::to_string(meshes_.size() + 1) + ".txt";
    save_mesh((dir_ / name).string(), *mesh);
    meshes_.emplace_back(mesh, name);
    add(stage, name);
    return name;
  }

  void write_branch(const StageSpec& spec, const std::string& stem, const Branch& br, StageResult& res) {
    save_branch_csv((dir_ / (stem + ".csv")).string(), br);
    add(spec.name, stem + ".csv");
    std::vector<HitSummary> hits;
    for (std::size_t k = 0; k < br.hits.size(); ++k) {
      const BranchPoint& pt = br.hits[k];
      auto mesh = mesh_of(pt);
      Solution s;
      s.mesh = mesh;
      s.mesh_path = mesh_file(mesh, spec.name);
      s.m = pt.params[0];
      s.eps = pt.params[1];
      s.h = pt.params[2];
      s.a = pt.params[3];
      const Eigen::Index n = mesh->node_count();
      s.u = pt.x.head(n);
      s.lambda = pt.x[n];
      s.energy = pt.observable("energy", 0.0);
      s.index = pt.index;
      const std::string hit_stem = stem + "_hit" + std::to_string(k + 1);
      save_solution(dir_ / (hit_stem + ".sol"), s);
      add(spec.name, hit_stem + ".sol");
      if (spec.contours && !sc_.output.contour_levels.empty()) {
        for (const auto& f : export_contours(s, sc_.output.contour_levels, dir_ / "contours", hit_stem)) {
          add(spec.name, "contours/" + f.path.filename().string());
        }
      }
      hits.push_back(HitSummary{pt, classify_interface(s.u, *mesh, s.cone())});
    }
    res.hits.push_back(std::move(hits));
  }

  void write_summary() {
    std::ofstream os(dir_ / "summary.txt");
    os << std::setprecision(8);
    for (const auto& res : result_.stages) {
      os << "[stage " << res.name << "]\n";
      os << "status " << res.status << '\n';
      if (!res.message.empty()) os << "message " << res.message << '\n';
      if (res.seeds_found > 0) os << "seeds " << res.seeds_found << '\n';
      for (std::size_t j = 0; j < res.branches.size(); ++j) {
        const Branch& br = res.branches[j];
        os << "branch " << j + 1 << " points " << br.points.size() << " stop " << br.stop_reason << '\n';
        for (const auto& ev : br.events) {
          os << "  " << to_string(ev.kind) << ' ' << format_params(ev.point.params);
          if (ev.kind == EventKind::bp) os << " index " << ev.index_before << "->" << ev.index_after;
          if (!ev.resolved) os << " unresolved";
          os << '\n';
        }
        if (j < res.hits.size()) {
          for (std::size_t k = 0; k < res.hits[j].size(); ++k) {
            const auto& hit = res.hits[j][k];
            os << "  hit " << k + 1 << ' ' << format_params(hit.point.params)
               << " energy=" << hit.point.observable("energy", 0.0) << " index=" << hit.point.index
               << " type=" << hit.label << '\n';
          }
        }
      }
      os << '\n';
    }
    add("-", "summary.txt");
  }

  const Scenario& sc_;
  const RunOptions& opt_;
  int workers_ = 1;
  fs::path dir_;
  std::shared_ptr<const Mesh> base_mesh_;
  std::vector<std::shared_ptr<const Mesh>> seed_meshes_;
  std::vector<std::pair<std::shared_ptr<const Mesh>, std::string>> meshes_;
  RunResult result_;
};

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunOptions& options) {
  Runner runner(scenario, options);
  return runner.run();
}

}  // namespace conecrit
