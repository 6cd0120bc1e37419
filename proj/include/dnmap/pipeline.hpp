#pragma once

// Stage drivers shared by the command line tool and the tests: building the
// refinement levels of a config, the orientability study, the trace set and the
// reconstruction run.

#include "dnmap/config.hpp"
#include "dnmap/reports.hpp"

#include <filesystem>

namespace dnmap {

struct Level {
  Real h = 0;
  SurfaceMesh mesh;
};

inline std::filesystem::path resolve_path(const RunConfig& c, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : std::filesystem::path(c.workspace) / path;
}

inline std::filesystem::path output_path(const RunConfig& c) { return resolve_path(c, c.output_dir); }

/// Largest edge g-length of a mesh.
inline Real mesh_size(const SurfaceMesh& m) {
  Real h = 0;
  for (const auto& g : m.metric)
    for (Real l2 : edge_lengths2(g)) h = std::max(h, std::sqrt(l2));
  return h;
}

/// One mesh per level: read from input_meshes when given, generated otherwise.
inline std::vector<Level> build_levels(const RunConfig& c) {
  std::vector<Level> out;
  if (!c.input_meshes.empty()) {
    for (const auto& p : c.input_meshes) {
      const auto path = resolve_path(c, p);
      if (!std::filesystem::exists(path)) throw Error("missing input mesh " + path.string());
      Level l;
      l.mesh = read_mesh(path.string());
      l.h = mesh_size(l.mesh);
      out.push_back(std::move(l));
    }
    return out;
  }
  for (Real h : c.levels) {
    const SurfaceParams p = level_params(c, h);
    out.push_back({nominal_mesh_size(p), generate_surface(p)});
  }
  return out;
}

inline OrientabilityOptions orientability_options(const RunConfig& c) {
  OrientabilityOptions o;
  o.kernel.modes = c.kernel_modes;
  o.hamiltonian.modes = c.hamiltonian_modes;
  o.thresholds = {c.eps_orient, c.eps_nonorient, c.decrease_ratio};
  return o;
}

inline OrientabilityReport run_orientability(const std::vector<Level>& levels, const RunConfig& c) {
  std::vector<DnOperator> dns;
  std::vector<Real> hs;
  for (const auto& l : levels) {
    dns.push_back(assemble_dn(l.mesh));
    hs.push_back(l.h);
  }
  return orientability_report(dns, hs, orientability_options(c));
}

// --- traces ------------------------------------------------------------------

struct TraceRun {
  Real h = 0;
  std::vector<TraceElement> elements;
  std::vector<TraceRecord> records;  // file names are filled in by the writer
};

inline TraceRun run_traces(const Level& level, const RunConfig& c) {
  if (level.mesh.boundary_loops.size() != 1 || is_orientable(level.mesh))
    throw Error("traces need a nonorientable surface with one boundary loop");
  BaseObserver obs(assemble_dn(level.mesh));
  OracleCover oc(level.mesh);
  const NeumannFieldData nf = neumann_field_phi(oc);
  const ObserverOptions oo{c.theta};
  TraceRun run;
  run.h = level.h;
  const auto gens = trig_generators(obs.chart(), c.generator_modes);
  for (std::size_t g = 0; g < gens.size(); ++g) {
    TraceElement e = assemble_trace(obs, gens[g], oo);
    TraceRecord r;
    r.mode = static_cast<int>(g / 2) + 1;
    r.sine = g % 2 == 1;
    r.name = std::string(r.sine ? "sin" : "cos") + std::to_string(r.mode);
    r.b = e.b;
    r.b_oracle = compute_b_oracle(oc, gens[g], nf);
    r.constancy_residual = e.constant.constancy_residual;
    r.relative_constancy = e.constant.relative_constancy;
    r.scale = e.constant.scale;
    r.used_nodes = e.constant.used_nodes;
    r.excluded_nodes = e.constant.excluded_nodes;
    r.involution_defect = involution_defect(e);
    const ConjugacyCheck cc = verify_conjugate_pair(oc, e);
    r.cr_residual = cc.cr_residual;
    r.parity_defect = cc.parity_defect;
    run.records.push_back(std::move(r));
    run.elements.push_back(std::move(e));
  }
  return run;
}

// --- reconstruction ----------------------------------------------------------

struct ReconstructionRun {
  ReconstructionSummary summary;
  ReconstructedManifold manifold;
  DnOperator input;
  SpectrumEmbedding embedding;
  std::vector<int> shilov;
  std::vector<int> cover_boundary;  // sorted boundary vertices of the oracle cover
};

inline ReconstructionRun run_reconstruction(const Level& level, const RunConfig& c) {
  if (level.mesh.boundary_loops.size() != 1 || is_orientable(level.mesh))
    throw Error("reconstruction needs a nonorientable surface with one boundary loop");
  ReconstructionRun run;
  BaseObserver obs(assemble_dn(level.mesh));
  OracleCover oc(level.mesh);
  std::vector<TraceElement> gens;
  for (const auto& f : trig_generators(obs.chart(), c.generator_modes)) gens.push_back(assemble_trace(obs, f, ObserverOptions{c.theta}));
  run.embedding = embed_spectrum(gens, oc);

  ShilovOptions so;
  so.directions = c.shilov_directions;
  so.max_power = c.shilov_max_power;
  so.random_probes = c.shilov_random_probes;
  so.seed = c.seed;
  const ShilovResult sh = shilov_boundary(run.embedding, oc, so);
  run.shilov = sh.vertices;
  std::set<int> boundary;
  for (const auto& l : oc.mesh().boundary_loops) boundary.insert(l.begin(), l.end());
  run.cover_boundary.assign(boundary.begin(), boundary.end());

  const InvolutionPairing pairing = pair_involution(run.embedding);
  const RecoveredMetric rm = recover_metric(run.embedding, oc, pairing);
  run.manifold = build_quotient(run.embedding, oc, pairing, rm);
  run.input = obs.dn();

  auto& s = run.summary;
  s.h = level.h;
  s.cover_vertices = run.embedding.num_vertices();
  s.generators = static_cast<int>(gens.size());
  s.min_separation = run.embedding.min_separation;
  s.boundary_attach_error = run.embedding.boundary_attach_error;
  s.shilov_probes = sh.probes;
  s.shilov_found = static_cast<int>(sh.vertices.size());
  for (int v : sh.vertices) s.shilov_on_boundary += boundary.count(v) ? 1 : 0;
  s.true_boundary = static_cast<int>(boundary.size());
  int agree = 0;
  for (int v = 0; v < s.cover_vertices; ++v) agree += pairing.tau[v] == (*oc.mesh().involution)[v] ? 1 : 0;
  s.tau_agreement = static_cast<Real>(agree) / s.cover_vertices;
  s.well_posed_fraction = pairing.well_posed_fraction;
  s.boundary_length_error = rm.boundary_length_error;
  s.metric_asymmetry = run.manifold.metric_asymmetry;
  s.quotient_vertices = run.manifold.mesh.num_vertices();
  s.quotient_triangles = run.manifold.mesh.num_triangles();
  s.euler_characteristic = euler_characteristic(run.manifold.mesh);
  return run;
}

}  // namespace dnmap
