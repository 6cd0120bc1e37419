#pragma once

// File formats: mesh documents, DN operator exports, boundary trace tables and
// run manifests. JSON documents go through nlohmann::json, whose number output
// round-trips doubles exactly.

#include "dnmap/fem.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>

namespace dnmap {

using Json = nlohmann::json;

inline constexpr const char* kMeshFormat = "dnmap-mesh";
inline constexpr const char* kDnFormat = "dnmap-dn";
inline constexpr int kFormatVersion = 1;

namespace detail {

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed: " + path);
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(what + ": " + e.what());
  }
}

inline void expect_format(const Json& j, const char* format) {
  if (!j.is_object() || j.value("format", std::string()) != format)
    throw Error(std::string("document is not a ") + format + " file");
  if (j.value("version", 0) != kFormatVersion) throw Error(std::string("unsupported ") + format + " version");
}

inline Json matrix_to_json(const MatrixX& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixX matrix_from_json(const Json& j, int n, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) throw Error(std::string(name) + ": wrong row count");
  MatrixX m(n, n);
  for (int r = 0; r < n; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != n) throw Error(std::string(name) + ": wrong column count");
    for (int c = 0; c < n; ++c) m(r, c) = j[r][c].get<Real>();
  }
  return m;
}

}  // namespace detail

// --- mesh --------------------------------------------------------------------

inline Json mesh_to_json(const SurfaceMesh& m) {
  Json j;
  j["format"] = kMeshFormat;
  j["version"] = kFormatVersion;
  j["coord_dim"] = m.coord_dim;
  Json verts = Json::array();
  for (const auto& v : m.vertices) {
    Json p = Json::array();
    for (int k = 0; k < m.coord_dim; ++k) p.push_back(v[k]);
    verts.push_back(std::move(p));
  }
  j["vertices"] = std::move(verts);
  Json tris = Json::array(), metric = Json::array();
  for (int t = 0; t < m.num_triangles(); ++t) {
    tris.push_back({m.triangles[t][0], m.triangles[t][1], m.triangles[t][2]});
    const auto& g = m.metric[t];
    metric.push_back({g(0, 0), g(0, 1), g(1, 1)});
  }
  j["triangles"] = std::move(tris);
  j["metric"] = std::move(metric);
  j["boundary_loops"] = m.boundary_loops;
  if (m.involution) j["involution"] = *m.involution;
  if (m.projection) j["projection"] = *m.projection;
  return j;
}

inline SurfaceMesh mesh_from_json(const Json& j) {
  detail::expect_format(j, kMeshFormat);
  SurfaceMesh m;
  try {
    m.coord_dim = j.at("coord_dim").get<int>();
    if (m.coord_dim != 2 && m.coord_dim != 3) throw Error("coord_dim must be 2 or 3");
    for (const auto& p : j.at("vertices")) {
      if (static_cast<int>(p.size()) != m.coord_dim) throw Error("vertex with wrong coordinate count");
      Eigen::Vector3d v = Eigen::Vector3d::Zero();
      for (int k = 0; k < m.coord_dim; ++k) v[k] = p[k].get<Real>();
      m.vertices.push_back(v);
    }
    for (const auto& t : j.at("triangles")) {
      if (t.size() != 3) throw Error("triangle without three vertices");
      m.triangles.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
    }
    for (const auto& g : j.at("metric")) {
      if (g.size() != 3) throw Error("metric entry must be [g11, g12, g22]");
      Eigen::Matrix2d mg;
      mg << g[0].get<Real>(), g[1].get<Real>(), g[1].get<Real>(), g[2].get<Real>();
      m.metric.push_back(mg);
    }
    m.boundary_loops = j.at("boundary_loops").get<std::vector<std::vector<int>>>();
    if (j.contains("involution")) m.involution = j["involution"].get<std::vector<int>>();
    if (j.contains("projection")) m.projection = j["projection"].get<std::vector<int>>();
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed mesh document: ") + e.what());
  }
  validate(m);
  return m;
}

inline void write_mesh(const std::string& path, const SurfaceMesh& m) { detail::write_text(path, mesh_to_json(m).dump(1) + "\n"); }
inline SurfaceMesh read_mesh(const std::string& path) { return mesh_from_json(detail::parse_json(detail::read_text(path), path)); }

// --- DN operator -------------------------------------------------------------

inline Json chart_to_json(const BoundaryChart& c) {
  Json loops = Json::array();
  for (const auto& l : c.loops)
    loops.push_back({{"nodes", l.nodes}, {"arc", l.arc}, {"edge_len", l.edge_len}, {"length", l.length},
                     {"orientation", l.orientation}, {"sigma", l.sigma}});
  return loops;
}

inline BoundaryChart chart_from_json(const Json& loops) {
  BoundaryChart c;
  int offset = 0;
  for (const auto& lj : loops) {
    BoundaryLoop l;
    l.nodes = lj.at("nodes").get<std::vector<int>>();
    l.arc = lj.at("arc").get<std::vector<Real>>();
    l.edge_len = lj.at("edge_len").get<std::vector<Real>>();
    l.length = lj.at("length").get<Real>();
    l.orientation = lj.at("orientation").get<int>();
    l.sigma = lj.at("sigma").get<int>();
    if (l.arc.size() != l.nodes.size() || l.edge_len.size() != l.nodes.size()) throw Error("boundary loop tables differ in length");
    c.offset.push_back(offset);
    offset += static_cast<int>(l.nodes.size());
    c.loops.push_back(std::move(l));
  }
  c.size = offset;
  return c;
}

inline Json dn_to_json(const DnOperator& dn) {
  Json j;
  j["format"] = kDnFormat;
  j["version"] = kFormatVersion;
  j["size"] = dn.size();
  j["loops"] = chart_to_json(dn.chart);
  j["lambda"] = detail::matrix_to_json(dn.lambda);
  j["mass"] = detail::matrix_to_json(dn.mass);
  if (!dn.warning.empty()) j["warning"] = dn.warning;
  return j;
}

inline DnOperator dn_from_json(const Json& j) {
  detail::expect_format(j, kDnFormat);
  DnOperator dn;
  try {
    const int n = j.at("size").get<int>();
    dn.chart = chart_from_json(j.at("loops"));
    if (dn.chart.size != n) throw Error("DN size does not match its boundary chart");
    dn.lambda = detail::matrix_from_json(j.at("lambda"), n, "lambda");
    dn.mass = detail::matrix_from_json(j.at("mass"), n, "mass");
    dn.energy = dn.mass * dn.lambda;
    dn.warning = j.value("warning", std::string());
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed DN document: ") + e.what());
  }
  return dn;
}

inline void write_dn(const std::string& path, const DnOperator& dn) { detail::write_text(path, dn_to_json(dn).dump(1) + "\n"); }
inline DnOperator read_dn(const std::string& path) { return dn_from_json(detail::parse_json(detail::read_text(path), path)); }

/// CSV export: <stem>_lambda.csv and <stem>_mass.csv (dense rows), and
/// <stem>_arc.csv with columns loop,index,vertex,arc,edge_len.
inline std::vector<std::string> write_dn_csv(const std::string& stem, const DnOperator& dn) {
  auto matrix_csv = [](const MatrixX& m) {
    std::ostringstream s;
    s << std::setprecision(17);
    for (int r = 0; r < m.rows(); ++r) {
      for (int c = 0; c < m.cols(); ++c) s << (c ? "," : "") << m(r, c);
      s << "\n";
    }
    return s.str();
  };
  std::ostringstream arc;
  arc << std::setprecision(17) << "loop,index,vertex,arc,edge_len\n";
  for (int j = 0; j < dn.chart.num_loops(); ++j)
    for (int i = 0; i < dn.chart.loop_size(j); ++i)
      arc << j << "," << i << "," << dn.chart.loops[j].nodes[i] << "," << dn.chart.loops[j].arc[i] << ","
          << dn.chart.loops[j].edge_len[i] << "\n";
  const std::vector<std::string> files{stem + "_lambda.csv", stem + "_mass.csv", stem + "_arc.csv"};
  detail::write_text(files[0], matrix_csv(dn.lambda));
  detail::write_text(files[1], matrix_csv(dn.mass));
  detail::write_text(files[2], arc.str());
  return files;
}

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline Real to_real(const std::string& s) {
  std::size_t pos = 0;
  Real v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw Error("not a number in CSV: '" + s + "'");
  }
  if (pos != s.size()) throw Error("not a number in CSV: '" + s + "'");
  return v;
}

inline MatrixX read_matrix_csv(const std::string& path) {
  const auto rows = read_csv(path);
  const int n = static_cast<int>(rows.size());
  MatrixX m(n, n);
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(rows[r].size()) != n) throw Error(path + ": matrix is not square");
    for (int c = 0; c < n; ++c) m(r, c) = to_real(rows[r][c]);
  }
  return m;
}

}  // namespace detail

/// Reads the CSV triple written by write_dn_csv. Loop orientation and sigma
/// are not part of the CSV and come back as +1 / 0.
inline DnOperator read_dn_csv(const std::string& stem) {
  DnOperator dn;
  dn.lambda = detail::read_matrix_csv(stem + "_lambda.csv");
  dn.mass = detail::read_matrix_csv(stem + "_mass.csv");
  if (dn.lambda.rows() != dn.mass.rows()) throw Error("lambda and mass CSV sizes differ");
  dn.energy = dn.mass * dn.lambda;
  const auto rows = detail::read_csv(stem + "_arc.csv");
  if (rows.empty() || rows[0].size() != 5 || rows[0][0] != "loop") throw Error("arc CSV has no header");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const int j = static_cast<int>(detail::to_real(rows[r][0]));
    if (j == static_cast<int>(dn.chart.loops.size())) {
      dn.chart.offset.push_back(static_cast<int>(r) - 1);
      dn.chart.loops.emplace_back();
    }
    if (j != static_cast<int>(dn.chart.loops.size()) - 1) throw Error("arc CSV loops out of order");
    auto& l = dn.chart.loops.back();
    l.nodes.push_back(static_cast<int>(detail::to_real(rows[r][2])));
    l.arc.push_back(detail::to_real(rows[r][3]));
    l.edge_len.push_back(detail::to_real(rows[r][4]));
  }
  for (auto& l : dn.chart.loops) l.length = std::accumulate(l.edge_len.begin(), l.edge_len.end(), 0.0);
  dn.chart.size = static_cast<int>(rows.size()) - 1;
  if (dn.chart.size != dn.size()) throw Error("arc CSV does not match the matrix size");
  return dn;
}

// --- traces ------------------------------------------------------------------

/// Columns loop,index,arc,re,im.
inline void write_trace_csv(const std::string& path, const BoundaryChart& chart, const VectorXc& values) {
  if (values.size() != chart.size) throw Error("trace size does not match the chart");
  std::ostringstream s;
  s << std::setprecision(17) << "loop,index,arc,re,im\n";
  for (int j = 0; j < chart.num_loops(); ++j)
    for (int i = 0; i < chart.loop_size(j); ++i) {
      const Complex v = values[chart.offset[j] + i];
      s << j << "," << i << "," << chart.loops[j].arc[i] << "," << v.real() << "," << v.imag() << "\n";
    }
  detail::write_text(path, s.str());
}

/// Reads a trace table; the chart must have the same loop sizes and arc table.
inline VectorXc read_trace_csv(const std::string& path, const BoundaryChart& chart, Real arc_tol = 1e-9) {
  const auto rows = detail::read_csv(path);
  if (rows.empty() || rows[0].size() != 5 || rows[0][0] != "loop") throw Error(path + ": trace CSV has no header");
  if (static_cast<int>(rows.size()) - 1 != chart.size) throw Error(path + ": trace length does not match the chart");
  VectorXc v(chart.size);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const int j = static_cast<int>(detail::to_real(rows[r][0])), i = static_cast<int>(detail::to_real(rows[r][1]));
    if (j < 0 || j >= chart.num_loops() || i < 0 || i >= chart.loop_size(j)) throw Error(path + ": node out of range");
    if (std::abs(detail::to_real(rows[r][2]) - chart.loops[j].arc[i]) > arc_tol * std::max(1.0, chart.loops[j].length))
      throw Error(path + ": arc length does not match the chart");
    v[chart.offset[j] + i] = Complex(detail::to_real(rows[r][3]), detail::to_real(rows[r][4]));
  }
  return v;
}

// --- documents ---------------------------------------------------------------

inline void write_json(const std::string& path, const Json& j) { detail::write_text(path, j.dump(2) + "\n"); }
inline Json read_json(const std::string& path) { return detail::parse_json(detail::read_text(path), path); }

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

}  // namespace dnmap
