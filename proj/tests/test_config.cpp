#include "support.hpp"

using namespace dnmap;
using namespace dnmap::test;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("default config survives a text round trip", "[config]") {
  const RunConfig c;
  const std::string text = to_text(c);
  CHECK(to_text(parse_config(text)) == text);
}

TEST_CASE("every key round trips through the canonical text", "[config]") {
  const std::string src =
      "# comment line\n"
      "workspace = /tmp/ws\n"
      "output_dir = results\n"
      "input_meshes = a.json, b.json\n"
      "surface = flat_moebius\n"
      "radius = 2.5\n"
      "inner_radius = 0.25\n"
      "length = 6.283185307179586\n"
      "half_width = 0.75\n"
      "levels = 0.3, 0.15\n"
      "generator_modes = 6\n"
      "kernel_modes = 3\n"
      "hamiltonian_modes = 5\n"
      "eps_orient = 2e-4\n"
      "eps_nonorient = 0.03\n"
      "decrease_ratio = 1.8\n"
      "theta = 0.2\n"
      "shilov_directions = 16\n"
      "shilov_max_power = 2\n"
      "shilov_random_probes = 7\n"
      "verify_modes = 4\n"
      "seed = 12345678901\n";
  const RunConfig c = parse_config(src);
  CHECK(c.workspace == "/tmp/ws");
  CHECK(c.input_meshes == std::vector<std::string>{"a.json", "b.json"});
  CHECK(c.surface.kind == SurfaceKind::flat_moebius);
  CHECK(c.surface.length == 6.283185307179586);
  CHECK(c.levels == std::vector<Real>{0.3, 0.15});
  CHECK(c.eps_orient == 2e-4);
  CHECK(c.shilov_random_probes == 7);
  CHECK(c.seed == 12345678901ull);
  const std::string canonical = to_text(c);
  CHECK(to_text(parse_config(canonical)) == canonical);
  // One line per key, in table order.
  std::size_t lines = 0;
  for (char ch : canonical) lines += ch == '\n';
  CHECK(lines == config_keys().size());
}

TEST_CASE("config errors name the offending key or line", "[config][error]") {
  CHECK_THROWS_WITH(parse_config("colour = red\n"), ContainsSubstring("unknown key 'colour'"));
  CHECK_THROWS_WITH(parse_config("theta 0.1\n"), ContainsSubstring("line 1"));
  CHECK_THROWS_WITH(parse_config("theta = abc\n"), ContainsSubstring("'theta'"));
  CHECK_THROWS_WITH(parse_config("kernel_modes = 2.5\n"), ContainsSubstring("cannot parse"));
  CHECK_THROWS_WITH(parse_config("surface = torus\n"), ContainsSubstring("unknown surface kind"));
  CHECK_THROWS_WITH(parse_config("levels = 0.1, -0.2\n"), ContainsSubstring("positive"));
  CHECK_THROWS_WITH(parse_config("levels =\n"), ContainsSubstring("at least one level"));
  CHECK_THROWS_WITH(parse_config("theta = 0\n"), ContainsSubstring("thresholds"));
  CHECK_THROWS_WITH(parse_config("generator_modes = 0\n"), ContainsSubstring("mode counts"));
  CHECK_THROWS_WITH(parse_config("shilov_random_probes = -1\n"), ContainsSubstring("Shilov"));
  CHECK_THROWS_WITH(parse_config("half_width = 0\n"), ContainsSubstring("shape parameters"));
}

TEST_CASE("help lists every key with its default", "[config]") {
  const std::string help = config_help();
  const RunConfig defaults;
  for (const auto& k : config_keys()) {
    INFO(k.name);
    CHECK(help.find("  " + k.name + "  [default: " + k.get(defaults) + "]") != std::string::npos);
    CHECK_FALSE(k.help.empty());
  }
}

TEST_CASE("resolution follows the requested mesh size", "[config]") {
  SurfaceParams p;
  p.kind = SurfaceKind::disk;
  CHECK(resolution_for(p, 0.05) == 20);
  CHECK(resolution_for(p, 5.0) == 4);
  p.kind = SurfaceKind::annulus;
  CHECK(resolution_for(p, 0.0625) == 8);
  p.kind = SurfaceKind::flat_cylinder;
  CHECK(resolution_for(p, 0.1) == 20);
  p.kind = SurfaceKind::flat_moebius;
  CHECK(resolution_for(p, 0.05) % 2 == 0);
  CHECK(resolution_for(p, 0.05) == 40);
  CHECK_THROWS_WITH(resolution_for(p, 0), ContainsSubstring("positive"));
  // Mesh size of the generated level is within a factor 2 of the target.
  RunConfig c;
  for (SurfaceKind k : {SurfaceKind::disk, SurfaceKind::flat_cylinder, SurfaceKind::flat_moebius}) {
    c.surface.kind = k;
    for (Real h : {0.2, 0.1}) {
      const Real actual = mesh_size(generate_surface(level_params(c, h)));
      INFO(to_string(k) << " h " << h << " actual " << actual);
      CHECK(actual >= 0.5 * h);
      CHECK(actual <= 2 * h);
    }
  }
}

TEST_CASE("paths resolve against the workspace", "[config]") {
  RunConfig c;
  c.workspace = "/data/run";
  c.output_dir = "out";
  CHECK(output_path(c) == std::filesystem::path("/data/run/out"));
  c.output_dir = "/abs/out";
  CHECK(output_path(c) == std::filesystem::path("/abs/out"));
  CHECK(resolve_path(c, "m.json") == std::filesystem::path("/data/run/m.json"));
}

TEST_CASE("input meshes replace generated levels", "[config]") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "dnmap_config_levels";
  std::filesystem::create_directories(dir);
  write_mesh((dir / "a.json").string(), surface(SurfaceKind::disk, 4));
  write_mesh((dir / "b.json").string(), surface(SurfaceKind::disk, 8));
  RunConfig c;
  c.workspace = dir.string();
  c.input_meshes = {"a.json", "b.json"};
  const auto levels = build_levels(c);
  REQUIRE(levels.size() == 2);
  CHECK(levels[0].h > levels[1].h);
  CHECK(levels[1].mesh.num_vertices() == surface(SurfaceKind::disk, 8).num_vertices());
  c.input_meshes = {"missing.json"};
  CHECK_THROWS_AS(build_levels(c), Error);
  std::filesystem::remove_all(dir);
}
