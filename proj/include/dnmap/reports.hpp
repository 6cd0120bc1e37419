#pragma once

// Structured reports (JSON) for each pipeline stage and their readers, plus the
// run manifest. Reports hold numbers only; timestamps go in the manifest.

#include "dnmap/io.hpp"
#include "dnmap/orientability.hpp"
#include "dnmap/reconstruction.hpp"

#include <Eigen/Core>
#include <chrono>
#include <ctime>

namespace dnmap {

inline constexpr const char* kLibraryVersion = "0.1.0";

// --- orientability -----------------------------------------------------------

inline Orientation orientation_from_string(std::string_view s) {
  for (auto o : {Orientation::orientable, Orientation::nonorientable, Orientation::inconclusive})
    if (s == to_string(o)) return o;
  throw Error("unknown orientability decision '" + std::string(s) + "'");
}

/// Exit status of the orient command.
inline int exit_code(Orientation o) {
  switch (o) {
    case Orientation::orientable: return 0;
    case Orientation::nonorientable: return 1;
    default: return 2;
  }
}

inline Json report_to_json(const OrientabilityReport& r) {
  Json j;
  j["report"] = "orientability";
  j["decision"] = to_string(r.decision);
  j["measure"] = r.measure;
  j["thresholds"] = {{"eps_orient", r.thresholds.eps_orient},
                     {"eps_nonorient", r.thresholds.eps_nonorient},
                     {"decrease_ratio", r.thresholds.decrease_ratio}};
  Json levels = Json::array();
  for (const auto& l : r.levels) {
    Json lj{{"h", l.h}, {"boundary_nodes", l.boundary_nodes}, {"loops", l.loops},
            {"hamiltonian_residual", l.hamiltonian_residual}, {"component_means", l.component_means},
            {"measure_value", level_measure(l)}};
    if (l.sigma_min >= 0) lj["sigma_min"] = l.sigma_min;
    levels.push_back(std::move(lj));
  }
  j["levels"] = std::move(levels);
  return j;
}

inline OrientabilityReport orientability_report_from_json(const Json& j) {
  if (j.value("report", std::string()) != "orientability") throw Error("not an orientability report");
  OrientabilityReport r;
  try {
    r.decision = orientation_from_string(j.at("decision").get<std::string>());
    r.measure = j.at("measure").get<std::string>();
    const auto& t = j.at("thresholds");
    r.thresholds = {t.at("eps_orient").get<Real>(), t.at("eps_nonorient").get<Real>(), t.at("decrease_ratio").get<Real>()};
    for (const auto& lj : j.at("levels")) {
      LevelRecord l;
      l.h = lj.at("h").get<Real>();
      l.boundary_nodes = lj.at("boundary_nodes").get<int>();
      l.loops = lj.at("loops").get<int>();
      l.sigma_min = lj.value("sigma_min", -1.0);
      l.hamiltonian_residual = lj.at("hamiltonian_residual").get<std::vector<Real>>();
      l.component_means = lj.at("component_means").get<std::vector<Real>>();
      r.levels.push_back(std::move(l));
    }
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed orientability report: ") + e.what());
  }
  return r;
}

// --- traces ------------------------------------------------------------------

struct TraceRecord {
  std::string name;  // e.g. "cos2"
  std::string file;  // trace CSV, relative to the manifest
  int mode = 0;
  bool sine = false;
  Real b = 0;                 // constant used in the trace (observer side)
  Real b_oracle = 0;          // from the oracle cover, for comparison
  Real constancy_residual = 0;
  Real relative_constancy = 0;
  Real scale = 0;
  int used_nodes = 0, excluded_nodes = 0;
  Real involution_defect = 0;
  Real cr_residual = 0;       // oracle cross-checks of the conjugate pair
  Real parity_defect = 0;
};

inline Json trace_record_to_json(const TraceRecord& t) {
  return {{"name", t.name}, {"file", t.file}, {"f", {{"basis", t.sine ? "sin" : "cos"}, {"mode", t.mode}}},
          {"b", t.b}, {"b_oracle", t.b_oracle}, {"constancy_residual", t.constancy_residual},
          {"relative_constancy", t.relative_constancy}, {"scale", t.scale}, {"used_nodes", t.used_nodes},
          {"excluded_nodes", t.excluded_nodes}, {"involution_defect", t.involution_defect},
          {"cr_residual", t.cr_residual}, {"parity_defect", t.parity_defect}};
}

inline TraceRecord trace_record_from_json(const Json& j) {
  TraceRecord t;
  try {
    t.name = j.at("name").get<std::string>();
    t.file = j.at("file").get<std::string>();
    t.sine = j.at("f").at("basis").get<std::string>() == "sin";
    t.mode = j.at("f").at("mode").get<int>();
    t.b = j.at("b").get<Real>();
    t.b_oracle = j.at("b_oracle").get<Real>();
    t.constancy_residual = j.at("constancy_residual").get<Real>();
    t.relative_constancy = j.at("relative_constancy").get<Real>();
    t.scale = j.at("scale").get<Real>();
    t.used_nodes = j.at("used_nodes").get<int>();
    t.excluded_nodes = j.at("excluded_nodes").get<int>();
    t.involution_defect = j.at("involution_defect").get<Real>();
    t.cr_residual = j.at("cr_residual").get<Real>();
    t.parity_defect = j.at("parity_defect").get<Real>();
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed trace record: ") + e.what());
  }
  return t;
}

/// The manifest of a trace set also carries the doubled boundary chart the
/// CSV files are sampled on.
inline Json trace_set_to_json(const std::vector<TraceRecord>& records, const BoundaryChart& chart, Real h) {
  Json recs = Json::array();
  for (const auto& r : records) recs.push_back(trace_record_to_json(r));
  return {{"report", "traces"}, {"h", h}, {"chart", chart_to_json(chart)}, {"traces", std::move(recs)}};
}

struct TraceSet {
  Real h = 0;
  BoundaryChart chart;
  std::vector<TraceRecord> records;
};

inline TraceSet trace_set_from_json(const Json& j) {
  if (j.value("report", std::string()) != "traces") throw Error("not a trace manifest");
  TraceSet s;
  try {
    s.h = j.at("h").get<Real>();
    s.chart = chart_from_json(j.at("chart"));
    for (const auto& r : j.at("traces")) s.records.push_back(trace_record_from_json(r));
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed trace manifest: ") + e.what());
  }
  return s;
}

// --- reconstruction ----------------------------------------------------------

inline Json reconstruction_to_json(const ReconstructedManifold& rec) {
  Json orbits = Json::array();
  for (const auto& o : rec.orbits) orbits.push_back({o[0], o[1]});
  return {{"format", "dnmap-reconstruction"}, {"version", kFormatVersion}, {"mesh", mesh_to_json(rec.mesh)},
          {"orbits", std::move(orbits)}, {"quotient_of", rec.quotient_of},
          {"boundary_to_input", rec.boundary_to_input}, {"metric_asymmetry", rec.metric_asymmetry}};
}

inline ReconstructedManifold reconstruction_from_json(const Json& j) {
  detail::expect_format(j, "dnmap-reconstruction");
  ReconstructedManifold rec;
  try {
    rec.mesh = mesh_from_json(j.at("mesh"));
    for (const auto& o : j.at("orbits")) rec.orbits.push_back({o.at(0).get<int>(), o.at(1).get<int>()});
    rec.quotient_of = j.at("quotient_of").get<std::vector<int>>();
    rec.boundary_to_input = j.at("boundary_to_input").get<std::vector<int>>();
    rec.metric_asymmetry = j.at("metric_asymmetry").get<Real>();
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed reconstruction: ") + e.what());
  }
  if (static_cast<int>(rec.orbits.size()) != rec.mesh.num_vertices()) throw Error("reconstruction: orbit count mismatch");
  return rec;
}

/// Numbers describing one reconstruction run.
struct ReconstructionSummary {
  Real h = 0;
  int cover_vertices = 0;
  int generators = 0;
  Real min_separation = 0;
  Real boundary_attach_error = 0;
  int shilov_probes = 0;
  int shilov_found = 0;
  int shilov_on_boundary = 0;  // checked against the oracle cover
  int true_boundary = 0;
  Real tau_agreement = 0;      // fraction of vertices where the paired tau equals the oracle tau
  Real well_posed_fraction = 0;
  Real boundary_length_error = 0;
  Real metric_asymmetry = 0;
  int quotient_vertices = 0;
  int quotient_triangles = 0;
  int euler_characteristic = 0;
};

inline Json summary_to_json(const ReconstructionSummary& s) {
  return {{"report", "reconstruction"}, {"h", s.h}, {"cover_vertices", s.cover_vertices}, {"generators", s.generators},
          {"min_separation", s.min_separation}, {"boundary_attach_error", s.boundary_attach_error},
          {"shilov", {{"probes", s.shilov_probes}, {"found", s.shilov_found}, {"on_boundary", s.shilov_on_boundary},
                      {"true_boundary", s.true_boundary}}},
          {"tau_agreement", s.tau_agreement}, {"well_posed_fraction", s.well_posed_fraction},
          {"boundary_length_error", s.boundary_length_error}, {"metric_asymmetry", s.metric_asymmetry},
          {"quotient", {{"vertices", s.quotient_vertices}, {"triangles", s.quotient_triangles},
                        {"euler_characteristic", s.euler_characteristic}}}};
}

inline ReconstructionSummary summary_from_json(const Json& j) {
  if (j.value("report", std::string()) != "reconstruction") throw Error("not a reconstruction report");
  ReconstructionSummary s;
  try {
    s.h = j.at("h").get<Real>();
    s.cover_vertices = j.at("cover_vertices").get<int>();
    s.generators = j.at("generators").get<int>();
    s.min_separation = j.at("min_separation").get<Real>();
    s.boundary_attach_error = j.at("boundary_attach_error").get<Real>();
    const auto& sh = j.at("shilov");
    s.shilov_probes = sh.at("probes").get<int>();
    s.shilov_found = sh.at("found").get<int>();
    s.shilov_on_boundary = sh.at("on_boundary").get<int>();
    s.true_boundary = sh.at("true_boundary").get<int>();
    s.tau_agreement = j.at("tau_agreement").get<Real>();
    s.well_posed_fraction = j.at("well_posed_fraction").get<Real>();
    s.boundary_length_error = j.at("boundary_length_error").get<Real>();
    s.metric_asymmetry = j.at("metric_asymmetry").get<Real>();
    const auto& q = j.at("quotient");
    s.quotient_vertices = q.at("vertices").get<int>();
    s.quotient_triangles = q.at("triangles").get<int>();
    s.euler_characteristic = q.at("euler_characteristic").get<int>();
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed reconstruction report: ") + e.what());
  }
  return s;
}

inline Json mismatch_to_json(const CopyMismatch& m) {
  return {{"report", "verify"}, {"operator_mismatch", m.operator_mismatch}, {"symmetric_mismatch", m.symmetric_mismatch},
          {"input_eigenvalues", m.input_eigen}, {"copy_eigenvalues", m.copy_eigen},
          {"lowest_nonzero_mismatch", m.lowest_nonzero_mismatch}, {"max_eigen_mismatch", m.max_eigen_mismatch},
          {"boundary_length_mismatch", m.boundary_length_mismatch}, {"euler_characteristic", m.euler_characteristic}};
}

inline CopyMismatch mismatch_from_json(const Json& j) {
  if (j.value("report", std::string()) != "verify") throw Error("not a verify report");
  CopyMismatch m;
  try {
    m.operator_mismatch = j.at("operator_mismatch").get<Real>();
    m.symmetric_mismatch = j.at("symmetric_mismatch").get<Real>();
    m.input_eigen = j.at("input_eigenvalues").get<std::vector<Real>>();
    m.copy_eigen = j.at("copy_eigenvalues").get<std::vector<Real>>();
    m.lowest_nonzero_mismatch = j.at("lowest_nonzero_mismatch").get<Real>();
    m.max_eigen_mismatch = j.at("max_eigen_mismatch").get<Real>();
    m.boundary_length_mismatch = j.at("boundary_length_mismatch").get<Real>();
    m.euler_characteristic = j.at("euler_characteristic").get<int>();
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed verify report: ") + e.what());
  }
  return m;
}

// --- manifest ----------------------------------------------------------------

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json versions_json() {
  return {{"dnmap", kLibraryVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

/// artifacts: (path relative to the output directory, file content hash).
inline Json make_manifest(const std::string& command, const std::string& config_text,
                          const std::vector<std::pair<std::string, std::string>>& artifacts, int exit_status) {
  Json arts = Json::array();
  for (const auto& [path, hash] : artifacts) arts.push_back({{"path", path}, {"fnv1a", hash}});
  return {{"command", command}, {"config_hash", fnv1a_hex(config_text)}, {"versions", versions_json()},
          {"created", utc_timestamp()}, {"exit_status", exit_status}, {"artifacts", std::move(arts)}};
}

}  // namespace dnmap
