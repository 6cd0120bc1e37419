#include "support.hpp"

#include <random>

using namespace dnmap;
using namespace dnmap::test;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("dnmap_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void check_same_mesh(const SurfaceMesh& a, const SurfaceMesh& b) {
  CHECK(a.coord_dim == b.coord_dim);
  REQUIRE(a.num_vertices() == b.num_vertices());
  for (int v = 0; v < a.num_vertices(); ++v) CHECK((a.vertices[v] - b.vertices[v]).norm() == 0.0);
  CHECK(a.triangles == b.triangles);
  REQUIRE(a.metric.size() == b.metric.size());
  for (std::size_t t = 0; t < a.metric.size(); ++t) CHECK((a.metric[t] - b.metric[t]).norm() == 0.0);
  CHECK(a.boundary_loops == b.boundary_loops);
  CHECK(a.involution == b.involution);
  CHECK(a.projection == b.projection);
}

void check_same_chart(const BoundaryChart& a, const BoundaryChart& b, bool with_labels) {
  REQUIRE(a.num_loops() == b.num_loops());
  CHECK(a.offset == b.offset);
  CHECK(a.size == b.size);
  for (int j = 0; j < a.num_loops(); ++j) {
    CHECK(a.loops[j].nodes == b.loops[j].nodes);
    CHECK(a.loops[j].arc == b.loops[j].arc);
    CHECK(a.loops[j].edge_len == b.loops[j].edge_len);
    CHECK(std::abs(a.loops[j].length - b.loops[j].length) <= 1e-14 * a.loops[j].length);
    if (with_labels) {
      CHECK(a.loops[j].orientation == b.loops[j].orientation);
      CHECK(a.loops[j].sigma == b.loops[j].sigma);
    }
  }
}

}  // namespace

TEST_CASE("mesh JSON round trip on every kind and on a cover", "[io]") {
  TempDir dir;
  for (SurfaceKind k : all_kinds()) {
    const SurfaceMesh m = surface(k, 6);
    write_mesh(dir / "m.json", m);
    check_same_mesh(m, read_mesh(dir / "m.json"));
  }
  const SurfaceMesh cover = build_double_cover(surface(SurfaceKind::flat_moebius, 4));
  write_mesh(dir / "c.json", cover);
  check_same_mesh(cover, read_mesh(dir / "c.json"));
}

TEST_CASE("malformed mesh documents are rejected", "[io][error]") {
  const SurfaceMesh m = surface(SurfaceKind::disk, 4);
  Json j = mesh_to_json(m);
  SECTION("wrong format tag") {
    j["format"] = "something";
    CHECK_THROWS_WITH(mesh_from_json(j), ContainsSubstring("not a dnmap-mesh"));
  }
  SECTION("future version") {
    j["version"] = 99;
    CHECK_THROWS_WITH(mesh_from_json(j), ContainsSubstring("unsupported"));
  }
  SECTION("missing field") {
    j.erase("triangles");
    CHECK_THROWS_WITH(mesh_from_json(j), ContainsSubstring("malformed mesh"));
  }
  SECTION("short metric entry") {
    j["metric"][0] = {1.0, 0.0};
    CHECK_THROWS_WITH(mesh_from_json(j), ContainsSubstring("[g11, g12, g22]"));
  }
  SECTION("invalid geometry is caught by validation") {
    j["metric"][0] = {-1.0, 0.0, 1.0};
    CHECK_THROWS_WITH(mesh_from_json(j), ContainsSubstring("positive definite"));
  }
  SECTION("text that is not JSON") {
    TempDir dir;
    detail::write_text(dir / "bad.json", "{ not json");
    CHECK_THROWS_AS(read_mesh(dir / "bad.json"), Error);
    CHECK_THROWS_WITH(read_mesh(dir / "missing.json"), ContainsSubstring("missing.json"));
  }
}

TEST_CASE("DN operator JSON round trip is exact", "[io]") {
  TempDir dir;
  for (SurfaceKind k : {SurfaceKind::disk, SurfaceKind::annulus, SurfaceKind::flat_moebius}) {
    const DnOperator dn = assemble_dn(surface(k, 4));
    write_dn(dir / "dn.json", dn);
    const DnOperator back = read_dn(dir / "dn.json");
    CHECK((back.lambda - dn.lambda).norm() == 0.0);
    CHECK((back.mass - dn.mass).norm() == 0.0);
    check_same_chart(dn.chart, back.chart, true);
    CHECK(back.warning == dn.warning);
  }
}

TEST_CASE("DN operator CSV round trip", "[io]") {
  TempDir dir;
  const DnOperator dn = assemble_dn(surface(SurfaceKind::annulus, 4));
  const auto files = write_dn_csv(dir / "dn", dn);
  REQUIRE(files.size() == 3);
  for (const auto& f : files) CHECK(fs::exists(f));
  const DnOperator back = read_dn_csv(dir / "dn");
  CHECK((back.lambda - dn.lambda).norm() == 0.0);
  CHECK((back.mass - dn.mass).norm() == 0.0);
  check_same_chart(dn.chart, back.chart, false);
  detail::write_text(dir / "dn_arc.csv", "loop,index,vertex,arc,edge_len\n0,0,0,0,1\n");
  CHECK_THROWS_WITH(read_dn_csv(dir / "dn"), ContainsSubstring("does not match"));
  detail::write_text(dir / "dn_mass.csv", "1,2\n3,x\n");
  CHECK_THROWS_WITH(read_dn_csv(dir / "dn"), ContainsSubstring("not a number"));
}

TEST_CASE("trace CSV round trip and arc checks", "[io]") {
  TempDir dir;
  const SurfaceMesh base = surface(SurfaceKind::flat_moebius, 6);
  const BaseObserver obs(assemble_dn(base));
  const TraceElement e = assemble_trace(obs, trig_mode(obs.chart(), 0, 1, true));
  write_trace_csv(dir / "t.csv", e.trace.chart, e.trace.values);
  const VectorXc back = read_trace_csv(dir / "t.csv", e.trace.chart);
  CHECK((back - e.trace.values).cwiseAbs().maxCoeff() == 0.0);
  BoundaryChart shifted = e.trace.chart;
  shifted.loops[1].arc[2] += 1e-3;
  CHECK_THROWS_WITH(read_trace_csv(dir / "t.csv", shifted), ContainsSubstring("arc length does not match"));
  CHECK_THROWS_WITH(read_trace_csv(dir / "t.csv", obs.chart()), ContainsSubstring("trace length"));
  CHECK_THROWS_WITH(write_trace_csv(dir / "u.csv", obs.chart(), e.trace.values), ContainsSubstring("does not match"));
}

TEST_CASE("report documents round trip", "[io]") {
  TempDir dir;
  SECTION("orientability") {
    RunConfig cfg;
    cfg.surface.kind = SurfaceKind::flat_moebius;
    cfg.levels = {0.4, 0.2};
    const OrientabilityReport r = run_orientability(build_levels(cfg), cfg);
    write_json(dir / "o.json", report_to_json(r));
    const OrientabilityReport b = orientability_report_from_json(read_json(dir / "o.json"));
    CHECK(b.decision == r.decision);
    CHECK(b.measure == r.measure);
    REQUIRE(b.levels.size() == r.levels.size());
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
      CHECK(b.levels[i].sigma_min == r.levels[i].sigma_min);
      CHECK(b.levels[i].hamiltonian_residual == r.levels[i].hamiltonian_residual);
      CHECK(b.levels[i].component_means == r.levels[i].component_means);
      CHECK(level_measure(b.levels[i]) == level_measure(r.levels[i]));
    }
    CHECK(report_to_json(b) == report_to_json(r));
    CHECK_THROWS_WITH(orientability_report_from_json(Json{{"report", "traces"}}), ContainsSubstring("not an orientability"));
  }
  SECTION("traces") {
    TraceRecord t;
    t.name = "cos1";
    t.file = "trace_cos1.csv";
    t.b = 0.25;
    t.b_oracle = 0.2501;
    t.constancy_residual = 1e-5;
    t.used_nodes = 40;
    const SurfaceMesh base = surface(SurfaceKind::flat_moebius, 4);
    const DoubledBoundary d = doubled_boundary(make_chart(base));
    write_json(dir / "t.json", trace_set_to_json({t}, d.chart, 0.1));
    const TraceSet s = trace_set_from_json(read_json(dir / "t.json"));
    CHECK(s.h == 0.1);
    check_same_chart(d.chart, s.chart, true);
    REQUIRE(s.records.size() == 1);
    CHECK(trace_record_to_json(s.records[0]) == trace_record_to_json(t));
  }
  SECTION("verify") {
    CopyMismatch m;
    m.operator_mismatch = 0.01;
    m.input_eigen = {0.5, 0.5, 1.0};
    m.copy_eigen = {0.51, 0.5, 1.01};
    write_json(dir / "v.json", mismatch_to_json(m));
    CHECK(mismatch_to_json(mismatch_from_json(read_json(dir / "v.json"))) == mismatch_to_json(m));
    CHECK_THROWS_WITH(mismatch_from_json(Json{{"report", "verify"}}), ContainsSubstring("malformed verify"));
  }
  SECTION("reconstruction summary") {
    ReconstructionSummary s;
    s.h = 0.05;
    s.tau_agreement = 1;
    s.euler_characteristic = 0;
    s.shilov_found = 12;
    CHECK(summary_to_json(summary_from_json(summary_to_json(s))) == summary_to_json(s));
  }
}

TEST_CASE("reconstruction document round trip", "[io]") {
  RunConfig cfg;
  cfg.surface.kind = SurfaceKind::flat_moebius;
  cfg.levels = {0.25};
  const ReconstructionRun run = run_reconstruction(build_levels(cfg).back(), cfg);
  TempDir dir;
  write_json(dir / "r.json", reconstruction_to_json(run.manifold));
  const ReconstructedManifold back = reconstruction_from_json(read_json(dir / "r.json"));
  check_same_mesh(run.manifold.mesh, back.mesh);
  CHECK(back.orbits == run.manifold.orbits);
  CHECK(back.quotient_of == run.manifold.quotient_of);
  CHECK(back.boundary_to_input == run.manifold.boundary_to_input);
  Json j = reconstruction_to_json(run.manifold);
  j["orbits"].erase(j["orbits"].begin());
  CHECK_THROWS_WITH(reconstruction_from_json(j), ContainsSubstring("orbit count"));
}

TEST_CASE("manifest carries hashes and versions, timestamps only there", "[io]") {
  const Json m = make_manifest("orient", "surface = disk\n", {{"a.json", fnv1a_hex("x")}}, 0);
  CHECK(m.at("config_hash") == fnv1a_hex("surface = disk\n"));
  CHECK(m.at("versions").at("dnmap") == kLibraryVersion);
  CHECK(m.at("versions").contains("eigen"));
  CHECK(m.at("created").get<std::string>().size() == 20);
  CHECK(m.at("artifacts")[0].at("fnv1a") == fnv1a_hex("x"));
  // FNV-1a 64 reference values.
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("a") != fnv1a_hex("b"));
}

TEST_CASE("decision names and exit codes", "[io]") {
  for (auto o : {Orientation::orientable, Orientation::nonorientable, Orientation::inconclusive})
    CHECK(orientation_from_string(to_string(o)) == o);
  CHECK(exit_code(Orientation::orientable) == 0);
  CHECK(exit_code(Orientation::nonorientable) == 1);
  CHECK(exit_code(Orientation::inconclusive) == 2);
  CHECK_THROWS_WITH(orientation_from_string("maybe"), ContainsSubstring("unknown"));
}
