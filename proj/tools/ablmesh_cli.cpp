// ablmesh command-line front end.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "ablmesh/error.hpp"
#include "ablmesh/harness.hpp"
#include "json.hpp"

using namespace ablmesh;
namespace fs = std::filesystem;

namespace {

// Flags mirroring RunConfig keys, applied after the config file.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, int> on, off;
  bool quiet = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value config file (flags override it)")->check(CLI::ExistingFile);
    app->add_flag("-q,--quiet", quiet, "do not echo log lines");
    for (const auto& [key, type, help] : RunConfig::keys()) {
      if (type == "BOOL") {
        app->add_flag("--" + key, on[key], help);
        app->add_flag("--no-" + key, off[key], "disable: " + help);
      } else {
        app->add_option("--" + key, values[key], help)->type_name(type);
      }
    }
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) apply_config_file(cfg, config_file);
    for (const auto& [key, type, help] : RunConfig::keys()) {
      if (type == "BOOL") {
        if (on.at(key) && off.at(key)) throw ParameterError("both --" + key + " and --no-" + key + " given");
        if (on.at(key)) cfg.set(key, "true");
        if (off.at(key)) cfg.set(key, "false");
      } else if (const auto& v = values.at(key); !v.empty()) {
        cfg.set(key, v);
      }
    }
    cfg.validate();
    return cfg;
  }

  LogFn logger() const {
    if (quiet) return {};
    return [](const std::string& s) { std::cerr << s << '\n'; };
  }
};

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw InputError("cannot open '" + p.string() + "' for writing");
  os << text;
  if (!os) throw InputError("write failed: '" + p.string() + "'");
}

int cmd_mesh_surface(const ConfigFlags& f) {
  const RunConfig cfg = f.resolve();
  const SurfaceRun run = run_surface(cfg, f.logger());
  for (const auto& p : write_outputs(cfg, "surface", &run.mesh, nullptr)) std::cout << "wrote " << p << '\n';
  write_text(fs::path(cfg.out) / "surface_report.json", run.report_json);
  std::cout << "wrote " << (fs::path(cfg.out) / "surface_report.json").string() << '\n';
  std::cout << "nodes: " << run.mesh.node_count() << "\nelements: " << run.mesh.element_count() << '\n';
  std::cout << run.quality.to_text();
  return 0;
}

int cmd_mesh_abl(const ConfigFlags& f) {
  const RunConfig cfg = f.resolve();
  const AblRun run = run_abl(cfg, f.logger());
  for (const auto& p : write_outputs(cfg, "abl", nullptr, &run.mesh)) std::cout << "wrote " << p << '\n';
  write_text(fs::path(cfg.out) / "abl_report.json", run.report_json);
  std::cout << "wrote " << (fs::path(cfg.out) / "abl_report.json").string() << '\n';
  std::cout << "nodes: " << run.mesh.nodes.size() << "\nprisms: " << run.mesh.prisms.size()
            << "\ntetrahedra: " << run.mesh.tets.size() << "\nstructured_estimate: " << std::llround(run.structured.nodes)
            << "\nnode_ratio: " << static_cast<double>(run.mesh.nodes.size()) / run.structured.nodes << '\n';
  std::cout << run.quality.to_text() << run.audit.to_text();
  return run.audit.ok ? 0 : 3;
}

int cmd_optimize(const ConfigFlags& f, const std::string& input, const std::string& output) {
  const RunConfig cfg = f.resolve();
  const ExchangeDocument doc = read_exchange(fs::path(input));
  const std::string kind = exchange_mesh_kind(doc);
  nlohmann::ordered_json report;
  report["command"] = "optimize";
  report["input"] = input;
  report["kind"] = kind;
  std::vector<SweepRecord> recs;
  const fs::path out = output.empty() ? fs::path(cfg.out) / (kind == "surface" ? "surface_opt.mesh" : "abl_opt.mesh")
                                      : fs::path(output);
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  QualityReport before, after;
  if (kind == "surface") {
    TriSurfaceMesh m = read_surface_mesh(input);
    const auto terrain = load_config_terrain(cfg);
    before = mesh_quality_stats(m);
    recs = optimize_surface(m, *terrain, cfg.optimizer);
    after = mesh_quality_stats(m);
    write_mesh(m, out, MeshFormat::exchange);
  } else {
    HybridMesh m = read_hybrid_mesh(input);
    before = mesh_quality_stats(m);
    recs = optimize_volume(m, cfg.optimizer);
    after = mesh_quality_stats(m);
    const AuditReport audit = validate_conformity(m);
    report["audit_ok"] = audit.ok;
    write_mesh(m, out, MeshFormat::exchange);
  }
  auto log = f.logger();
  nlohmann::ordered_json sweeps = nlohmann::ordered_json::array();
  for (const auto& r : recs) {
    if (log) log(to_log_line("optimize", r));
    sweeps.push_back(to_log_line("optimize", r));
  }
  report["sweeps"] = sweeps;
  report["quality_before"] = nlohmann::ordered_json::parse(quality_report_json(before));
  report["quality_after"] = nlohmann::ordered_json::parse(quality_report_json(after));
  write_text(fs::path(out).replace_extension(".json"), report.dump(2) + "\n");
  std::cout << "wrote " << out.string() << '\n' << after.to_text();
  return 0;
}

int cmd_quality_report(const std::string& input, bool as_json) {
  const ExchangeDocument doc = read_exchange(fs::path(input));
  QualityReport r;
  if (exchange_mesh_kind(doc) == "surface") {
    r = mesh_quality_stats(surface_from_exchange(doc, input));
  } else {
    AuditReport audit;
    r = mesh_quality_stats(read_hybrid_mesh(input, &audit));
    if (!as_json) std::cout << audit.to_text();
  }
  std::cout << (as_json ? quality_report_json(r) : r.to_text());
  return 0;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    RunConfig probe;
    probe.set("hmax", item);  // reuse the number parser
    v.push_back(probe.h_max);
  }
  return v;
}

struct StudyFlags {
  std::string levels = "0.4,0.2,0.1,0.05";
  std::string hmins;
  double hmin_ratio = 4.0;
  double buffer_ratio = 4.0;
  bool no_uniform = false;
  bool no_adaptive = false;
  bool parallel = false;
};

int cmd_convergence(const ConfigFlags& f, const StudyFlags& s) {
  RunConfig cfg = f.resolve();
  const auto hmax = parse_list(s.levels);
  const auto hmin = s.hmins.empty() ? std::vector<double>{} : parse_list(s.hmins);
  if (!hmin.empty() && hmin.size() != hmax.size()) throw ParameterError("--hmins must match --levels in length");
  std::vector<ConvergenceLevel> levels;
  for (std::size_t i = 0; i < hmax.size(); ++i)
    levels.push_back({hmax[i], hmin.empty() ? hmax[i] / s.hmin_ratio : hmin[i]});
  // Terrain sampled for the finest level.
  cfg.h_max = hmax.front();
  cfg.h_min = levels.back().h_min;
  cfg.h_buffer = s.buffer_ratio * cfg.h_max;
  std::string desc;
  const auto terrain = load_config_terrain(cfg, &desc);
  HeightFunction truth;
  const std::string prefix = "analytic:";
  if (cfg.terrain.rfind(prefix, 0) == 0) truth = analytic_terrain(cfg.terrain.substr(prefix.size())).height;
  else truth = [terrain](double x, double y) { return terrain->height_at({x, y}); };

  ConvergenceOptions o;
  o.uniform = !s.no_uniform;
  o.adaptive = !s.no_adaptive;
  o.optimize = cfg.optimize;
  o.transition_factor = cfg.transition_factor;
  o.buffer_factor = cfg.buffer_factor;
  o.buffer_size_ratio = s.buffer_ratio;
  o.optimizer = cfg.optimizer;
  o.parallel = s.parallel;
  o.log = f.logger();
  const ConvergenceStudy study = run_convergence_study(terrain, truth, cfg.farm(), levels, o);

  nlohmann::ordered_json j;
  j["command"] = "convergence-study";
  j["terrain"] = desc;
  j["levels"] = nlohmann::ordered_json::array();
  for (const auto& l : levels) j["levels"].push_back({{"h_max", l.h_max}, {"h_min", l.h_min}});
  j["buffer_size_ratio"] = s.buffer_ratio;
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : study.records)
    j["records"].push_back({{"level", r.level},
                            {"h_max", r.h_max},
                            {"h_min", r.h_min},
                            {"adaptive", r.adaptive},
                            {"optimized", r.optimized},
                            {"farm_nodes", r.nodes},
                            {"total_nodes", r.total_nodes},
                            {"size_indicator", r.size_indicator},
                            {"l2_error", r.error},
                            {"farm_area", r.farm_area}});
  j["slopes"] = study.slopes;
  j["warnings"] = study.warnings;
  fs::create_directories(cfg.out);
  write_text(fs::path(cfg.out) / "convergence_report.json", j.dump(2) + "\n");
  write_text(fs::path(cfg.out) / "convergence.txt", study.to_text());
  std::cout << study.to_text();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ablmesh: terrain-adapted hybrid meshes for the atmospheric boundary layer"};
  app.require_subcommand(1);

  ConfigFlags surface_flags, abl_flags, opt_flags, study_flags;
  auto* surf = app.add_subcommand("mesh-surface", "adapted surface mesh of the terrain");
  surface_flags.attach(surf);
  auto* abl = app.add_subcommand("mesh-abl", "hybrid prism/tetrahedral mesh of the boundary layer");
  abl_flags.attach(abl);

  std::string opt_in, opt_out;
  auto* opt = app.add_subcommand("optimize", "re-optimize an exchange mesh file");
  opt->add_option("input", opt_in, "exchange mesh file")->required()->check(CLI::ExistingFile);
  opt->add_option("-o,--output", opt_out, "output file (default <out>/<kind>_opt.mesh)");
  opt_flags.attach(opt);

  std::string q_in;
  bool q_json = false;
  auto* qr = app.add_subcommand("quality-report", "quality statistics of an exchange mesh file");
  qr->add_option("input", q_in, "exchange mesh file")->required()->check(CLI::ExistingFile);
  qr->add_flag("--json", q_json, "print JSON");

  StudyFlags sf;
  auto* cs = app.add_subcommand("convergence-study", "geometry error of uniform and adaptive surface meshes");
  cs->add_option("--levels", sf.levels, "comma-separated h_max sequence")->capture_default_str();
  cs->add_option("--hmins", sf.hmins, "comma-separated h_min sequence (default h_max / hmin-ratio)");
  cs->add_option("--hmin-ratio", sf.hmin_ratio, "h_max / h_min when --hmins is absent")->capture_default_str();
  cs->add_option("--buffer-ratio", sf.buffer_ratio, "buffer size / h_max")->capture_default_str();
  cs->add_flag("--no-uniform", sf.no_uniform, "skip uniform meshes");
  cs->add_flag("--no-adaptive", sf.no_adaptive, "skip adaptive meshes");
  cs->add_flag("--parallel", sf.parallel, "run levels concurrently");
  study_flags.attach(cs);

  CLI11_PARSE(app, argc, argv);
  try {
    if (surf->parsed()) return cmd_mesh_surface(surface_flags);
    if (abl->parsed()) return cmd_mesh_abl(abl_flags);
    if (opt->parsed()) return cmd_optimize(opt_flags, opt_in, opt_out);
    if (qr->parsed()) return cmd_quality_report(q_in, q_json);
    if (cs->parsed()) return cmd_convergence(study_flags, sf);
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
