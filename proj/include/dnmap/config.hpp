#pragma once

// Run configuration: a key = value text file. Blank lines and lines starting
// with '#' are ignored. Every key is listed in config_keys() with its help text.

#include "dnmap/generate.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace dnmap {

struct RunConfig {
  std::string workspace = ".";  // root for every relative path
  std::string output_dir = "out";
  std::vector<std::string> input_meshes;  // replaces generation when non-empty, one per level
  SurfaceParams surface;
  std::vector<Real> levels{0.2, 0.1, 0.05};
  int generator_modes = 4;
  int kernel_modes = 2;
  int hamiltonian_modes = 8;
  Real eps_orient = 1e-3;
  Real eps_nonorient = 5e-2;
  Real decrease_ratio = 1.5;
  Real theta = 0.1;
  int shilov_directions = 64;
  int shilov_max_power = 4;
  int shilov_random_probes = 0;
  int verify_modes = 10;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::string format_real(Real v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error("config key '" + key + "': cannot parse '" + s + "'");
  return v;
}

}  // namespace detail

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline const std::vector<ConfigKey>& config_keys() {
  using detail::format_real;
  using detail::parse_number;
  auto real_key = [](std::string name, std::string help, Real RunConfig::*field) {
    return ConfigKey{name, std::move(help), [field](const RunConfig& c) { return format_real(c.*field); },
                     [field, name](RunConfig& c, const std::string& s) { c.*field = parse_number<Real>(name, s); }};
  };
  auto int_key = [](std::string name, std::string help, int RunConfig::*field) {
    return ConfigKey{name, std::move(help), [field](const RunConfig& c) { return std::to_string(c.*field); },
                     [field, name](RunConfig& c, const std::string& s) { c.*field = parse_number<int>(name, s); }};
  };
  auto shape_key = [](std::string name, std::string help, Real SurfaceParams::*field) {
    return ConfigKey{name, std::move(help), [field](const RunConfig& c) { return format_real(c.surface.*field); },
                     [field, name](RunConfig& c, const std::string& s) { c.surface.*field = parse_number<Real>(name, s); }};
  };
  static const std::vector<ConfigKey> keys{
      {"workspace", "root directory; relative paths below are resolved against it",
       [](const RunConfig& c) { return c.workspace; }, [](RunConfig& c, const std::string& s) { c.workspace = s; }},
      {"output_dir", "artifact directory, relative to workspace",
       [](const RunConfig& c) { return c.output_dir; }, [](RunConfig& c, const std::string& s) { c.output_dir = s; }},
      {"input_meshes", "comma list of mesh files used instead of generated levels (empty: generate)",
       [](const RunConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.input_meshes.size(); ++i) s += (i ? "," : "") + c.input_meshes[i];
         return s;
       },
       [](RunConfig& c, const std::string& s) { c.input_meshes = detail::split_list(s); }},
      {"surface", "disk | annulus | flat_cylinder | flat_moebius | embedded_moebius",
       [](const RunConfig& c) { return std::string(to_string(c.surface.kind)); },
       [](RunConfig& c, const std::string& s) { c.surface.kind = surface_kind_from_string(s); }},
      shape_key("radius", "disk radius, annulus outer radius, embedded_moebius centre-line radius", &SurfaceParams::radius),
      shape_key("inner_radius", "annulus inner radius", &SurfaceParams::inner_radius),
      shape_key("length", "flat_cylinder circumference, flat_moebius centre-line length", &SurfaceParams::length),
      shape_key("half_width", "half width of cylinder and Moebius strips", &SurfaceParams::half_width),
      {"levels", "comma list of target mesh sizes h, coarse to fine",
       [](const RunConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.levels.size(); ++i) s += (i ? "," : "") + format_real(c.levels[i]);
         return s;
       },
       [](RunConfig& c, const std::string& s) {
         c.levels.clear();
         for (const auto& item : detail::split_list(s)) c.levels.push_back(parse_number<Real>("levels", item));
       }},
      int_key("generator_modes", "trigonometric modes k used as generators cos/sin(2 pi k s / l), 2 per mode", &RunConfig::generator_modes),
      int_key("kernel_modes", "trial modes per loop of the kernel test", &RunConfig::kernel_modes),
      int_key("hamiltonian_modes", "trial modes per loop of the Hamiltonian test", &RunConfig::hamiltonian_modes),
      real_key("eps_orient", "orientable when the final level measure is below this", &RunConfig::eps_orient),
      real_key("eps_nonorient", "nonorientable when every level measure is at least this", &RunConfig::eps_nonorient),
      real_key("decrease_ratio", "required decrease factor per refinement for an orientable decision", &RunConfig::decrease_ratio),
      real_key("theta", "observer constant: drop nodes with |denominator| < theta * max", &RunConfig::theta),
      int_key("shilov_directions", "peak directions per Shilov probe", &RunConfig::shilov_directions),
      int_key("shilov_max_power", "highest generator power used as a Shilov probe", &RunConfig::shilov_max_power),
      int_key("shilov_random_probes", "extra Shilov probes: random combinations of generators, drawn from seed", &RunConfig::shilov_random_probes),
      int_key("verify_modes", "eigenvalues compared when verifying the reconstruction", &RunConfig::verify_modes),
      {"seed", "random seed for randomized probe sets",
       [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& s) { c.seed = parse_number<std::uint64_t>("seed", s); }},
  };
  return keys;
}

inline void validate(const RunConfig& c) {
  if (c.levels.empty() && c.input_meshes.empty()) throw Error("config: at least one level is required");
  for (Real h : c.levels)
    if (!(h > 0)) throw Error("config: levels must be positive");
  if (!(c.eps_orient > 0 && c.eps_nonorient > 0 && c.theta > 0 && c.decrease_ratio > 0))
    throw Error("config: thresholds must be positive");
  if (c.generator_modes < 1 || c.kernel_modes < 1 || c.hamiltonian_modes < 1) throw Error("config: mode counts must be >= 1");
  if (c.shilov_directions < 1 || c.shilov_max_power < 1 || c.shilov_random_probes < 0 || c.verify_modes < 1)
    throw Error("config: invalid Shilov or verify settings");
  if (!(c.surface.radius > 0 && c.surface.inner_radius > 0 && c.surface.length > 0 && c.surface.half_width > 0))
    throw Error("config: shape parameters must be positive");
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& k : config_keys())
    if (k.name == key) {
      k.set(c, value);
      return;
    }
  throw Error("config: unknown key '" + key + "'");
}

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(c, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  validate(c);
  return c;
}

/// Canonical text: every key in table order. parse_config(to_text(c)) == c.
inline std::string to_text(const RunConfig& c) {
  std::string out;
  for (const auto& k : config_keys()) out += k.name + " = " + k.get(c) + "\n";
  return out;
}

inline std::string config_help() {
  const RunConfig defaults;
  std::ostringstream s;
  s << "Config keys (key = value, '#' comments):\n";
  for (const auto& k : config_keys()) {
    s << "  " << k.name << "  [default: " << k.get(defaults) << "]\n      " << k.help << "\n";
  }
  return s.str();
}

/// Generator resolution giving a mesh size close to h.
inline int resolution_for(const SurfaceParams& p, Real h) {
  if (!(h > 0)) throw Error("mesh size must be positive");
  switch (p.kind) {
    case SurfaceKind::disk: return std::max(4, static_cast<int>(std::lround(p.radius / h)));
    case SurfaceKind::annulus: return std::max(4, static_cast<int>(std::lround((p.radius - p.inner_radius) / h)));
    case SurfaceKind::flat_cylinder: return std::max(4, static_cast<int>(std::lround(2 * p.half_width / h)));
    default: return detail::round_even(2 * p.half_width / h, 4);
  }
}

inline SurfaceParams level_params(const RunConfig& c, Real h) {
  SurfaceParams p = c.surface;
  p.resolution = resolution_for(p, h);
  return p;
}

}  // namespace dnmap
