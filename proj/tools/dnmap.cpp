// dnmap: batch driver for mesh generation, DN assembly, the orientability
// study, Moebius traces, reconstruction and plot-data export.
//
// Exit status: 0 success (orient: orientable), 1 orient: nonorientable,
// 2 orient: inconclusive, 3 runtime error, 4 usage error.

#include "dnmap/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace dnmap;

namespace {

constexpr int kRuntimeError = 3;
constexpr int kUsageError = 4;

struct Context {
  std::string command;
  RunConfig config;
  std::string config_text;
  fs::path out;
  std::vector<std::pair<std::string, std::string>> artifacts;

  std::string path(const std::string& rel) const { return (out / rel).string(); }

  void record(const std::string& rel) { artifacts.emplace_back(rel, fnv1a_hex(detail::read_text(path(rel)))); }

  void write_report(const std::string& rel, const Json& j) {
    write_json(path(rel), j);
    record(rel);
  }

  void write_manifest(int status) {
    Json m = make_manifest(command, config_text, artifacts, status);
    m["config"] = config_text;
    write_json(path("manifest_" + command + ".json"), m);
  }

  Level finest() const {
    auto levels = build_levels(config);
    return std::move(levels.back());
  }
};

std::string level_name(const char* stem, std::size_t i) { return std::string(stem) + "_l" + std::to_string(i); }

int gen_mesh(Context& ctx) {
  const auto levels = build_levels(ctx.config);
  Json index = Json::array();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::string name = level_name("mesh", i) + ".json";
    write_mesh(ctx.path(name), levels[i].mesh);
    ctx.record(name);
    index.push_back({{"file", name}, {"h", levels[i].h}, {"vertices", levels[i].mesh.num_vertices()},
                     {"triangles", levels[i].mesh.num_triangles()}, {"boundary_loops", levels[i].mesh.boundary_loops.size()},
                     {"euler_characteristic", euler_characteristic(levels[i].mesh)}, {"orientable", is_orientable(levels[i].mesh)}});
  }
  ctx.write_report("meshes.json", {{"report", "meshes"}, {"levels", index}});
  return 0;
}

int dn_map(Context& ctx) {
  const auto levels = build_levels(ctx.config);
  Json index = Json::array();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const DnOperator dn = assemble_dn(levels[i].mesh);
    const std::string stem = level_name("dn", i);
    write_dn(ctx.path(stem + ".json"), dn);
    ctx.record(stem + ".json");
    for (const auto& f : write_dn_csv(ctx.path(stem), dn)) ctx.record(fs::path(f).filename().string());
    if (!dn.warning.empty()) std::cerr << "warning: level " << i << ": " << dn.warning << "\n";
    index.push_back({{"file", stem + ".json"}, {"h", levels[i].h}, {"boundary_nodes", dn.size()},
                     {"loops", dn.chart.num_loops()}, {"warning", dn.warning}});
  }
  ctx.write_report("dn_maps.json", {{"report", "dn_maps"}, {"levels", index}});
  return 0;
}

int orient(Context& ctx) {
  const OrientabilityReport rep = run_orientability(build_levels(ctx.config), ctx.config);
  ctx.write_report("orientability_report.json", report_to_json(rep));
  std::cout << to_string(rep.decision) << "\n";
  return exit_code(rep.decision);
}

int traces(Context& ctx) {
  TraceRun run = run_traces(ctx.finest(), ctx.config);
  fs::create_directories(ctx.out / "traces");
  for (std::size_t i = 0; i < run.elements.size(); ++i) {
    auto& r = run.records[i];
    r.file = "trace_" + r.name + ".csv";
    write_trace_csv(ctx.path("traces/" + r.file), run.elements[i].trace.chart, run.elements[i].trace.values);
    ctx.record("traces/" + r.file);
  }
  ctx.write_report("traces/traces.json", trace_set_to_json(run.records, run.elements.front().trace.chart, run.h));
  return 0;
}

int reconstruct(Context& ctx) {
  const ReconstructionRun run = run_reconstruction(ctx.finest(), ctx.config);
  write_mesh(ctx.path("reconstructed_mesh.json"), run.manifold.mesh);
  ctx.record("reconstructed_mesh.json");
  ctx.write_report("reconstruction.json", reconstruction_to_json(run.manifold));
  ctx.write_report("reconstruction_report.json", summary_to_json(run.summary));
  return 0;
}

int verify(Context& ctx) {
  const std::string rec_path = ctx.path("reconstruction.json");
  if (!fs::exists(rec_path)) throw Error("missing input " + rec_path + " (run reconstruct first)");
  const ReconstructedManifold rec = reconstruction_from_json(read_json(rec_path));
  const DnOperator input = assemble_dn(ctx.finest().mesh);
  const CopyMismatch m = verify_copy(rec, input, ctx.config.verify_modes);
  ctx.write_report("verify_report.json", mismatch_to_json(m));
  std::cout << "operator mismatch " << m.operator_mismatch << ", lowest nonzero eigenvalue mismatch "
            << m.lowest_nonzero_mismatch << "\n";
  return 0;
}

int export_plots(Context& ctx) {
  fs::create_directories(ctx.out / "plots");
  const auto levels = build_levels(ctx.config);
  std::ostringstream spectrum;
  spectrum << std::setprecision(17) << "level,h,index,eigenvalue\n";
  std::vector<DnOperator> dns;
  std::vector<Real> hs;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    dns.push_back(assemble_dn(levels[i].mesh));
    hs.push_back(levels[i].h);
    const VectorX ev = dn_spectrum(dns.back());
    for (int k = 0; k < ev.size(); ++k) spectrum << i << "," << levels[i].h << "," << k << "," << ev[k] << "\n";
  }
  detail::write_text(ctx.path("plots/spectrum.csv"), spectrum.str());
  ctx.record("plots/spectrum.csv");

  const OrientabilityReport rep = orientability_report(dns, hs, orientability_options(ctx.config));
  std::ostringstream curve;
  curve << std::setprecision(17) << "level,h,measure,sigma_min,max_hamiltonian_residual\n";
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    const auto& l = rep.levels[i];
    Real hmax = 0;
    for (Real v : l.hamiltonian_residual) hmax = std::max(hmax, v);
    curve << i << "," << l.h << "," << level_measure(l) << "," << l.sigma_min << "," << hmax << "\n";
  }
  detail::write_text(ctx.path("plots/orient_curve.csv"), curve.str());
  ctx.record("plots/orient_curve.csv");

  // Point cloud of the reconstructed surface, when a reconstruction exists.
  const std::string rec_path = ctx.path("reconstruction.json");
  if (fs::exists(rec_path)) {
    const ReconstructedManifold rec = reconstruction_from_json(read_json(rec_path));
    std::vector<bool> on_boundary(rec.mesh.num_vertices(), false);
    for (const auto& l : rec.mesh.boundary_loops)
      for (int v : l) on_boundary[v] = true;
    std::ostringstream pts;
    pts << std::setprecision(17) << "vertex,x,y,boundary\n";
    for (int v = 0; v < rec.mesh.num_vertices(); ++v)
      pts << v << "," << rec.mesh.vertices[v].x() << "," << rec.mesh.vertices[v].y() << "," << (on_boundary[v] ? 1 : 0) << "\n";
    detail::write_text(ctx.path("plots/reconstructed_points.csv"), pts.str());
    ctx.record("plots/reconstructed_points.csv");
  }
  return 0;
}

void print_error(const std::string& command, const std::string& message) {
  std::cerr << Json{{"error", message}, {"command", command}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-to-Neumann maps, orientability from boundary data, Moebius band reconstruction"};
  app.require_subcommand(1);
  app.footer("\n" + config_help() +
             "\nArtifacts are written to <workspace>/<output_dir> with a manifest_<command>.json.\n"
             "Exit status: 0 success; orient 0 orientable, 1 nonorientable, 2 inconclusive; 3 error; 4 usage.");

  std::string config_file;
  std::vector<std::string> overrides;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"gen-mesh", "generate the surface at every level"},
      {"dn-map", "assemble the DN operator at every level (JSON and CSV)"},
      {"orient", "decide orientability from the DN operators"},
      {"traces", "boundary traces of the observer algebra on the finest level"},
      {"reconstruct", "rebuild the surface from its DN operator on the finest level"},
      {"verify", "compare the DN operator of the reconstruction with the input"},
      {"export-plots", "CSV data for spectra, refinement curves and point clouds"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_file, "config file (key = value)");
    sub->add_option("-s,--set", overrides, "override a config key: key=value");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg;
    if (!config_file.empty()) cfg = parse_config(detail::read_text(config_file));
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
      set_config_value(cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
    }
    validate(cfg);

    Context ctx{command, cfg, to_text(cfg), output_path(cfg), {}};
    fs::create_directories(ctx.out);
    int status = 0;
    if (command == "gen-mesh") status = gen_mesh(ctx);
    else if (command == "dn-map") status = dn_map(ctx);
    else if (command == "orient") status = orient(ctx);
    else if (command == "traces") status = traces(ctx);
    else if (command == "reconstruct") status = reconstruct(ctx);
    else if (command == "verify") status = verify(ctx);
    else status = export_plots(ctx);
    ctx.write_manifest(status);
    return status;
  } catch (const std::exception& e) {
    print_error(command, e.what());
    return kRuntimeError;
  }
}
