#pragma once

// Recovery of the Moebius band from its DN operator: characters of the trace
// algebra realised as point evaluations on the vertices of an oracle cover,
// boundary detection by peak points, the involution from conjugate pairs, an
// isothermal metric normalised by the known boundary length element, and the
// quotient surface whose DN operator is compared with the input.

#include "dnmap/moebius_traces.hpp"

#include <map>
#include <random>
#include <set>

namespace dnmap {

/// Values of every generator's holomorphic extension at every cover vertex.
struct SpectrumEmbedding {
  std::vector<TraceElement> generators;
  Eigen::MatrixXcd values;         // vertices x generators
  Real min_separation = 0;         // min over vertex pairs of ||w(x) - w(y)||
  std::array<int, 2> nearest_pair{-1, -1};
  std::vector<int> boundary_vertex;  // doubled-boundary index -> cover vertex, found from the traces
  Real boundary_attach_error = 0;    // max distance between a trace value and its vertex value
  int num_vertices() const { return static_cast<int>(values.rows()); }
};

namespace detail {

/// Extends every column of `traces` (doubled-boundary order) harmonically.
inline Eigen::MatrixXcd extend_columns(const OracleCover& oc, const DoubledBoundary& db, const Eigen::MatrixXcd& traces) {
  const auto& cm = oc.map();
  std::vector<int> index(static_cast<std::size_t>(2 * cm.base_size()), -1);
  for (int i = 0; i < db.chart.size; ++i) index[static_cast<std::size_t>(db.to_base[i] * 2 + (db.sigma[i] > 0 ? 0 : 1))] = i;
  Eigen::MatrixXcd out(oc.mesh().num_vertices(), traces.cols());
  for (int c = 0; c < traces.cols(); ++c) {
    VectorXc data(cm.cover_size());
    for (int i = 0; i < cm.cover_size(); ++i) {
      const int k = index[static_cast<std::size_t>(cm.to_base[i] * 2 + (cm.sigma[i] > 0 ? 0 : 1))];
      if (k < 0) throw Error("oracle cover boundary does not match the doubled boundary");
      data[i] = traces(k, c);
    }
    out.col(c) = oc.solver().extend(data);
  }
  return out;
}

}  // namespace detail

inline SpectrumEmbedding embed_spectrum(const std::vector<TraceElement>& generators, const OracleCover& oc) {
  if (generators.size() < 2) throw Error("embed_spectrum needs at least two generators");
  SpectrumEmbedding emb;
  emb.generators = generators;
  const auto& db = generators.front().boundary;
  Eigen::MatrixXcd traces(db.chart.size, static_cast<int>(generators.size()));
  for (std::size_t g = 0; g < generators.size(); ++g) {
    if (generators[g].trace.values.size() != db.chart.size) throw Error("generators live on different boundaries");
    traces.col(static_cast<int>(g)) = generators[g].trace.values;
  }
  emb.values = detail::extend_columns(oc, db, traces);

  const int n = emb.num_vertices();
  Real best = std::numeric_limits<Real>::infinity();
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const Real d = (emb.values.row(a) - emb.values.row(b)).squaredNorm();
      if (d < best) {
        best = d;
        emb.nearest_pair = {a, b};
      }
    }
  }
  emb.min_separation = n > 1 ? std::sqrt(best) : 0;

  // Boundary characters are point evaluations of the traces themselves.
  emb.boundary_vertex.resize(db.chart.size);
  for (int k = 0; k < db.chart.size; ++k) {
    Real dmin = std::numeric_limits<Real>::infinity();
    for (int v = 0; v < n; ++v) {
      const Real d = (emb.values.row(v) - traces.row(k)).squaredNorm();
      if (d < dmin) {
        dmin = d;
        emb.boundary_vertex[k] = v;
      }
    }
    emb.boundary_attach_error = std::max(emb.boundary_attach_error, std::sqrt(dmin));
  }
  return emb;
}

// --- boundary detection ------------------------------------------------------

struct ShilovOptions {
  int max_power = 4;        // powers w^2..w^max_power of every generator
  bool products = true;     // all pairwise products w_i w_j
  int directions = 64;      // peak directions per probe
  Real tie_band = 1e-9;     // relative band below the maximum counted as attaining it
  int random_probes = 0;    // extra probes: products of two random complex combinations of generators
  std::uint64_t seed = 1;
};

struct ShilovResult {
  std::vector<int> vertices;  // sorted
  int probes = 0;
};

/// Vertices where |exp(lambda e^{i theta} P)| peaks for every probe P of the
/// algebra, i.e. where Re(e^{i theta} P) is maximal.
inline ShilovResult shilov_boundary(const SpectrumEmbedding& emb, const OracleCover& oc, const ShilovOptions& opt = {}) {
  const auto& gens = emb.generators;
  if (gens.empty() || opt.directions < 1) throw Error("shilov_boundary needs a nonempty probe set");
  const auto& db = gens.front().boundary;
  std::vector<VectorXc> probes;
  for (const auto& g : gens) {
    VectorXc p = g.trace.values;
    probes.push_back(p);
    for (int k = 2; k <= opt.max_power; ++k) {
      p = p.cwiseProduct(g.trace.values);
      probes.push_back(p);
    }
  }
  if (opt.products)
    for (std::size_t i = 0; i < gens.size(); ++i)
      for (std::size_t j = i + 1; j < gens.size(); ++j) probes.push_back(gens[i].trace.values.cwiseProduct(gens[j].trace.values));
  if (opt.random_probes > 0) {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<Real> normal;
    auto combination = [&] {
      VectorXc c = VectorXc::Zero(db.chart.size);
      for (const auto& g : gens) c += Complex(normal(rng), normal(rng)) * g.trace.values;
      return c;
    };
    for (int k = 0; k < opt.random_probes; ++k) {
      const VectorXc a = combination();
      probes.push_back(a.cwiseProduct(combination()));
    }
  }

  Eigen::MatrixXcd traces(db.chart.size, static_cast<int>(probes.size()));
  int kept = 0;
  for (const auto& p : probes) {
    const Real range = (p.array() - p.mean()).abs().maxCoeff();
    if (!(range > 1e-12 * std::max<Real>(p.cwiseAbs().maxCoeff(), 1e-300))) continue;  // constants carry no information
    traces.col(kept++) = p;
  }
  if (kept == 0) throw Error("shilov_boundary: every probe is constant");
  const Eigen::MatrixXcd ext = detail::extend_columns(oc, db, traces.leftCols(kept));

  std::set<int> found;
  for (int c = 0; c < kept; ++c) {
    for (int d = 0; d < opt.directions; ++d) {
      const Complex rot = std::polar(1.0, 2 * kPi * d / opt.directions);
      const VectorX re = (ext.col(c) * rot).real();
      const Real hi = re.maxCoeff(), lo = re.minCoeff();
      const Real cut = hi - opt.tie_band * std::max(hi - lo, 1e-300);
      for (int v = 0; v < re.size(); ++v)
        if (re[v] >= cut) found.insert(v);
    }
  }
  ShilovResult r;
  r.vertices.assign(found.begin(), found.end());
  r.probes = kept;
  return r;
}

// --- involution --------------------------------------------------------------

struct InvolutionPairing {
  std::vector<int> tau;            // per cover vertex
  std::vector<Real> match_distance;
  std::vector<Real> second_distance;
  Real well_posed_fraction = 0;    // fraction with second / match >= 5
};

/// tau'(x) = argmin_y ||w(y) - conj(w(x))||, checked to be a fixed-point-free involution.
inline InvolutionPairing pair_involution(const SpectrumEmbedding& emb) {
  for (const auto& g : emb.generators)
    if (!g.hermitian) throw Error("pair_involution needs Hermitian generators");
  if (!(emb.min_separation > 0)) throw Error("pairing failed: embedding does not separate vertices, increase generators");
  const int n = emb.num_vertices();
  InvolutionPairing r;
  r.tau.assign(n, -1);
  r.match_distance.assign(n, 0);
  r.second_distance.assign(n, 0);
  const Eigen::MatrixXcd conj = emb.values.conjugate();
  int good = 0;
  for (int x = 0; x < n; ++x) {
    Real d1 = std::numeric_limits<Real>::infinity(), d2 = d1;
    int arg = -1;
    for (int y = 0; y < n; ++y) {
      const Real d = (emb.values.row(y) - conj.row(x)).squaredNorm();
      if (d < d1) {
        d2 = d1;
        d1 = d;
        arg = y;
      } else if (d < d2) {
        d2 = d;
      }
    }
    r.tau[x] = arg;
    r.match_distance[x] = std::sqrt(d1);
    r.second_distance[x] = std::sqrt(d2);
    if (r.second_distance[x] >= 5 * r.match_distance[x]) ++good;
  }
  r.well_posed_fraction = n > 0 ? static_cast<Real>(good) / n : 0;
  for (int x = 0; x < n; ++x)
    if (r.tau[x] == x || r.tau[r.tau[x]] != x) throw Error("pairing failed: result is not a free involution, increase generators");
  return r;
}

// --- metric ------------------------------------------------------------------

struct RecoveredMetric {
  std::vector<Eigen::Matrix2d> metric;  // per cover triangle, edge frame of the cover triangle
  VectorX log_factor;                   // log rho per cover vertex
  std::vector<int> chart_of_triangle;   // index into the chart list used
  Real boundary_length_error = 0;       // max relative error of recovered boundary edge lengths
};

struct MetricOptions {
  Real min_chart_area = 1e-10;  // relative to the mean chart triangle area
};

/// Holomorphic charts in order of preference: y + i z built from consecutive
/// generator pairs (cos, sin of the same mode), then each Hermitian generator.
inline std::vector<VectorXc> chart_candidates(const SpectrumEmbedding& emb) {
  std::vector<VectorXc> out;
  const int k = static_cast<int>(emb.values.cols());
  for (int c = 0; c + 1 < k; c += 2) out.push_back(emb.values.col(c) + Complex(0, 1) * emb.values.col(c + 1));
  for (int c = 0; c < k; ++c) out.push_back(emb.values.col(c));
  return out;
}

namespace detail {

inline Eigen::Matrix2d chart_gram(const VectorXc& z, const Triangle& t) {
  const Complex e1 = z[t[1]] - z[t[0]], e2 = z[t[2]] - z[t[0]];
  Eigen::Matrix2d g;
  g << std::norm(e1), (e1 * std::conj(e2)).real(), (e1 * std::conj(e2)).real(), std::norm(e2);
  return g;
}

inline Real chart_area(const VectorXc& z, const Triangle& t) {
  const Complex e1 = z[t[1]] - z[t[0]], e2 = z[t[2]] - z[t[0]];
  return 0.5 * std::abs((std::conj(e1) * e2).imag());
}

/// For each cover triangle: the triangle on the other sheet and, per corner,
/// the matching corner of that triangle.
struct TrianglePairing {
  std::vector<int> partner;
  std::vector<std::array<int, 3>> corner;
};

inline TrianglePairing pair_triangles(const SurfaceMesh& cover, const std::vector<int>& tau) {
  std::map<std::array<int, 3>, int> index;
  for (int t = 0; t < cover.num_triangles(); ++t) {
    auto key = cover.triangles[t];
    std::sort(key.begin(), key.end());
    index[key] = t;
  }
  TrianglePairing p;
  p.partner.resize(cover.num_triangles());
  p.corner.resize(cover.num_triangles());
  for (int t = 0; t < cover.num_triangles(); ++t) {
    const auto& tri = cover.triangles[t];
    std::array<int, 3> image{tau[tri[0]], tau[tri[1]], tau[tri[2]]};
    std::sort(image.begin(), image.end());
    const auto it = index.find(image);
    if (it == index.end() || it->second == t) throw Error("involution is not compatible with the triangulation");
    p.partner[t] = it->second;
    for (int k = 0; k < 3; ++k) p.corner[t][k] = corner_of(cover.triangles[it->second], tau[tri[k]]);
  }
  return p;
}

}  // namespace detail

/// Isothermal metric rho |dw|^2 in the chart w. log rho is fixed on the
/// boundary by the input length element and extended harmonically; the
/// resulting tensor is then averaged with its tau'-image. (For a general
/// element w the modulus |dw| itself is not tau'-invariant, so the symmetry is
/// imposed on the metric rather than on rho.)
inline RecoveredMetric recover_metric(const SpectrumEmbedding& emb, const OracleCover& oc, const InvolutionPairing& pairing,
                                      const MetricOptions& opt = {}) {
  const SurfaceMesh& cover = oc.mesh();
  const auto charts = chart_candidates(emb);
  const int nt = cover.num_triangles();
  Real mean_area = 0;
  for (const auto& t : cover.triangles) mean_area += detail::chart_area(charts.front(), t);
  mean_area /= std::max(nt, 1);

  RecoveredMetric r;
  r.chart_of_triangle.assign(nt, -1);
  std::vector<Eigen::Matrix2d> chart_g(nt);
  for (int t = 0; t < nt; ++t) {
    for (std::size_t c = 0; c < charts.size(); ++c) {
      if (detail::chart_area(charts[c], cover.triangles[t]) > opt.min_chart_area * mean_area) {
        r.chart_of_triangle[t] = static_cast<int>(c);
        chart_g[t] = detail::chart_gram(charts[c], cover.triangles[t]);
        break;
      }
    }
    if (r.chart_of_triangle[t] < 0) throw Error("recover_metric: no generator chart is nondegenerate on a triangle");
  }

  // Boundary log-factor from |dw| against the known ds, per doubled-boundary edge.
  const auto& db = emb.generators.front().boundary;
  const VectorXc& w0 = charts.front();
  VectorX vertex_log(db.chart.size);
  for (int j = 0; j < db.chart.num_loops(); ++j) {
    const auto& loop = db.chart.loops[j];
    const int n = db.chart.loop_size(j), o = db.chart.offset[j];
    std::vector<Real> edge_log(n);
    for (int i = 0; i < n; ++i) {
      const int a = emb.boundary_vertex[o + i], b = emb.boundary_vertex[o + (i + 1) % n];
      const Real dz = std::abs(w0[b] - w0[a]);
      if (!(dz > 0)) throw Error("recover_metric: chart collapses a boundary edge");
      edge_log[i] = 2 * std::log(loop.edge_len[i] / dz);
    }
    for (int i = 0; i < n; ++i) vertex_log[o + i] = 0.5 * (edge_log[i] + edge_log[(i + n - 1) % n]);
  }

  // Harmonic extension in the conformal class of the chart.
  SurfaceMesh conformal = cover;
  conformal.metric = chart_g;
  const BoundaryChart cc = make_chart(conformal);
  std::vector<int> doubled_of_vertex(cover.num_vertices(), -1);
  for (int k = 0; k < db.chart.size; ++k) doubled_of_vertex[emb.boundary_vertex[k]] = k;
  VectorX data(cc.size);
  for (int i = 0; i < cc.size; ++i) {
    const int k = doubled_of_vertex[cc.vertex(i)];
    if (k < 0) throw Error("recover_metric: boundary vertex not attached to the input boundary");
    data[i] = vertex_log[k];
  }
  const DirichletSolver solver(conformal);
  const VectorX ext = solver.extend(data);
  r.log_factor.resize(cover.num_vertices());
  r.log_factor = ext;

  std::vector<Eigen::Matrix2d> raw(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = cover.triangles[t];
    const Real lf = (ext[tri[0]] + ext[tri[1]] + ext[tri[2]]) / 3;
    raw[t] = std::exp(lf) * chart_g[t];
  }
  const auto tp = detail::pair_triangles(cover, pairing.tau);
  r.metric.resize(nt);
  for (int t = 0; t < nt; ++t) r.metric[t] = 0.5 * (raw[t] + permute_gram(raw[tp.partner[t]], tp.corner[t]));

  // Recovered boundary edge lengths against the input ds.
  EdgeMap edges(cover.triangles, cover.num_vertices());
  SurfaceMesh recovered = cover;
  recovered.metric = r.metric;
  for (int j = 0; j < db.chart.num_loops(); ++j) {
    const auto& loop = db.chart.loops[j];
    const int n = db.chart.loop_size(j), o = db.chart.offset[j];
    for (int i = 0; i < n; ++i) {
      const int a = emb.boundary_vertex[o + i], b = emb.boundary_vertex[o + (i + 1) % n];
      const Real len = edge_g_length(recovered, edges, a, b);
      r.boundary_length_error = std::max(r.boundary_length_error, std::abs(len - loop.edge_len[i]) / loop.edge_len[i]);
    }
  }
  return r;
}

/// Max over triangles of the largest angle difference between the chart
/// image and the cover metric (radians).
inline Real conformal_angle_defect(const OracleCover& oc, const SpectrumEmbedding& emb) {
  const auto charts = chart_candidates(emb);
  const SurfaceMesh& cover = oc.mesh();
  auto angles = [](const std::array<Real, 3>& l2) {
    // l2 = squared lengths of edges (01, 02, 12); angle at each corner
    const Real a = std::sqrt(l2[2]), b = std::sqrt(l2[1]), c = std::sqrt(l2[0]);
    auto ang = [](Real x, Real y, Real opp) { return std::acos(std::clamp((x * x + y * y - opp * opp) / (2 * x * y), -1.0, 1.0)); };
    return std::array<Real, 3>{ang(b, c, a), ang(a, c, b), ang(a, b, c)};
  };
  Real worst = 0;
  for (int t = 0; t < cover.num_triangles(); ++t) {
    const auto a0 = angles(edge_lengths2(cover.metric[t]));
    const auto a1 = angles(edge_lengths2(detail::chart_gram(charts.front(), cover.triangles[t])));
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(a0[k] - a1[k]));
  }
  return worst;
}

// --- quotient ----------------------------------------------------------------

struct ReconstructedManifold {
  SurfaceMesh mesh;                      // M' with metric g'
  std::vector<std::array<int, 2>> orbits;  // quotient vertex -> its two cover vertices
  std::vector<int> quotient_of;          // cover vertex -> quotient vertex
  std::vector<int> boundary_to_input;    // position on the quotient boundary loop -> input chart index
  Real metric_asymmetry = 0;             // max relative edge-length difference between paired triangles
};

inline ReconstructedManifold build_quotient(const SpectrumEmbedding& emb, const OracleCover& oc,
                                            const InvolutionPairing& pairing, const RecoveredMetric& rm) {
  const SurfaceMesh& cover = oc.mesh();
  const int nv = cover.num_vertices();
  const auto& tau = pairing.tau;
  ReconstructedManifold rec;
  rec.quotient_of.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (rec.quotient_of[v] >= 0) continue;
    const int id = static_cast<int>(rec.orbits.size());
    rec.orbits.push_back({v, tau[v]});
    rec.quotient_of[v] = rec.quotient_of[tau[v]] = id;
  }

  const auto tp = detail::pair_triangles(cover, tau);
  std::vector<char> used(cover.num_triangles(), 0);
  SurfaceMesh& q = rec.mesh;
  for (int t = 0; t < cover.num_triangles(); ++t) {
    if (used[t]) continue;
    const auto& tri = cover.triangles[t];
    used[t] = used[tp.partner[t]] = 1;
    const Eigen::Matrix2d g_other = permute_gram(rm.metric[tp.partner[t]], tp.corner[t]);
    const auto l0 = edge_lengths2(rm.metric[t]), l1 = edge_lengths2(g_other);
    for (int k = 0; k < 3; ++k)
      rec.metric_asymmetry = std::max(rec.metric_asymmetry, std::abs(std::sqrt(l0[k]) - std::sqrt(l1[k])) / std::sqrt(l0[k]));
    q.triangles.push_back({rec.quotient_of[tri[0]], rec.quotient_of[tri[1]], rec.quotient_of[tri[2]]});
    q.metric.push_back(0.5 * (rm.metric[t] + g_other));
  }
  const VectorXc w0 = chart_candidates(emb).front();
  q.coord_dim = 2;
  for (const auto& o : rec.orbits) q.vertices.emplace_back(w0[o[0]].real(), w0[o[0]].imag(), 0.0);

  // Boundary: the image of Gamma'_+, in input order.
  const auto& db = emb.generators.front().boundary;
  const int n = db.chart.loop_size(0);
  std::vector<int> loop(n);
  for (int i = 0; i < n; ++i) loop[i] = rec.quotient_of[emb.boundary_vertex[i]];
  const auto found = extract_boundary_loops(q.triangles, q.num_vertices());
  if (found.size() != 1 || static_cast<int>(found[0].size()) != n) throw Error("quotient does not have one boundary loop of the input size");
  // Keep the input order if it is a traversal direction of the quotient boundary.
  const auto& f0 = found[0];
  const auto pos = std::find(f0.begin(), f0.end(), loop[0]) - f0.begin();
  const bool same_direction = f0[(pos + 1) % n] == loop[1];
  if (!same_direction) {
    // Re-orient all triangles so the boundary runs along the input direction.
    for (auto& t : q.triangles) std::swap(t[1], t[2]);
    for (auto& g : q.metric) g = permute_gram(g, {0, 2, 1});
  }
  q.boundary_loops = {loop};
  rec.boundary_to_input.resize(n);
  std::iota(rec.boundary_to_input.begin(), rec.boundary_to_input.end(), 0);
  validate(q, 1e-9);
  return rec;
}

// --- closing the loop --------------------------------------------------------

struct CopyMismatch {
  Real operator_mismatch = 0;  // ||L' - L|| / ||L|| in the input mass norm
  Real symmetric_mismatch = 0; // same for the Schur complements (Frobenius)
  std::vector<Real> input_eigen, copy_eigen;  // lowest modes
  Real lowest_nonzero_mismatch = 0;
  Real max_eigen_mismatch = 0;                // over the compared nonzero modes
  Real boundary_length_mismatch = 0;
  int euler_characteristic = 0;
};

inline CopyMismatch verify_copy(const ReconstructedManifold& rec, const DnOperator& input, int modes = 10) {
  const DnOperator copy = assemble_dn(rec.mesh);
  if (copy.size() != input.size()) throw Error("reconstructed boundary sampling differs from the input and cannot be resampled");
  const int n = input.size();
  // Reorder the copy into input chart order.
  std::vector<int> perm(n);
  const auto& loop = rec.mesh.boundary_loops[0];
  for (int i = 0; i < n; ++i) {
    const int v = copy.chart.vertex(i);
    const auto it = std::find(loop.begin(), loop.end(), v);
    perm[i] = rec.boundary_to_input[it - loop.begin()];
  }
  MatrixX l(n, n), s(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      l(perm[a], perm[b]) = copy.lambda(a, b);
      s(perm[a], perm[b]) = copy.energy(a, b);
    }
  CopyMismatch r;
  const MatrixX u = Eigen::LLT<MatrixX>(input.mass).matrixU();
  const MatrixX uinv = u.inverse();
  auto opnorm = [](const MatrixX& m) { return Eigen::JacobiSVD<MatrixX>(m).singularValues()[0]; };
  r.operator_mismatch = opnorm(u * (l - input.lambda) * uinv) / opnorm(u * input.lambda * uinv);
  r.symmetric_mismatch = (s - input.energy).norm() / input.energy.norm();
  const VectorX e0 = dn_spectrum(input), e1 = dn_spectrum(copy);
  const int m = std::min<int>(modes, n);
  for (int k = 0; k < m; ++k) {
    r.input_eigen.push_back(e0[k]);
    r.copy_eigen.push_back(e1[k]);
    if (k >= 1) r.max_eigen_mismatch = std::max(r.max_eigen_mismatch, std::abs(e1[k] - e0[k]) / std::abs(e0[k]));
  }
  if (m >= 2) r.lowest_nonzero_mismatch = std::abs(e1[1] - e0[1]) / std::abs(e0[1]);
  r.boundary_length_mismatch = std::abs(copy.chart.total_length() - input.chart.total_length()) / input.chart.total_length();
  r.euler_characteristic = euler_characteristic(rec.mesh);
  return r;
}

}  // namespace dnmap
