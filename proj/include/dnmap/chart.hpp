#pragma once

#include "dnmap/mesh.hpp"

namespace dnmap {

struct BoundaryLoop {
  std::vector<int> nodes;      // mesh vertex indices, in traversal order
  std::vector<Real> arc;       // cumulative g-length at each node, arc[0] == 0
  std::vector<Real> edge_len;  // g-length of edge nodes[i] -> nodes[i+1] (cyclic)
  Real length = 0;
  int orientation = +1;  // +1 when the traversal agrees with the owning triangle of the first edge
  int sigma = 0;         // +1 / -1 on the two boundary components of a double cover
};

/// Boundary nodes of a mesh, numbered loop by loop. All boundary operators and
/// the DN matrix use this global numbering.
struct BoundaryChart {
  std::vector<BoundaryLoop> loops;
  std::vector<int> offset;  // index of the first node of each loop
  int size = 0;

  int num_loops() const { return static_cast<int>(loops.size()); }
  int loop_size(int j) const { return static_cast<int>(loops[j].nodes.size()); }

  int vertex(int i) const {
    const int j = loop_of(i);
    return loops[j].nodes[i - offset[j]];
  }

  int loop_of(int i) const {
    int j = num_loops() - 1;
    while (offset[j] > i) --j;
    return j;
  }

  std::vector<int> vertices() const {
    std::vector<int> out;
    out.reserve(size);
    for (const auto& l : loops) out.insert(out.end(), l.nodes.begin(), l.nodes.end());
    return out;
  }

  /// Map from mesh vertex to chart index (-1 for interior vertices).
  std::vector<int> index_of_vertex(int num_vertices) const {
    std::vector<int> idx(num_vertices, -1);
    for (int i = 0; i < size; ++i) idx[vertex(i)] = i;
    return idx;
  }

  Real total_length() const {
    Real s = 0;
    for (const auto& l : loops) s += l.length;
    return s;
  }

  /// Indicator of loop j as a chart vector.
  VectorX indicator(int j) const {
    VectorX v = VectorX::Zero(size);
    v.segment(offset[j], loop_size(j)).setOnes();
    return v;
  }
};

/// g-length of the mesh edge (a, b), read from any triangle containing it.
inline Real edge_g_length(const SurfaceMesh& m, const EdgeMap& edges, int a, int b) {
  const auto* uses = edges.find(a, b);
  if (uses == nullptr) throw Error("edge is not part of the mesh");
  const EdgeUse& u = uses->front();
  const Triangle& t = m.triangles[u.tri];
  const int la = static_cast<int>(std::find(t.begin(), t.end(), a) - t.begin());
  const int lb = static_cast<int>(std::find(t.begin(), t.end(), b) - t.begin());
  return std::sqrt(local_edge_length2(m.metric[u.tri], la, lb));
}

inline BoundaryChart make_chart(const SurfaceMesh& m) {
  EdgeMap edges(m.triangles, m.num_vertices());
  BoundaryChart chart;
  for (const auto& nodes : m.boundary_loops) {
    BoundaryLoop loop;
    loop.nodes = nodes;
    const int n = static_cast<int>(nodes.size());
    loop.arc.resize(n);
    loop.edge_len.resize(n);
    Real s = 0;
    for (int i = 0; i < n; ++i) {
      loop.arc[i] = s;
      loop.edge_len[i] = edge_g_length(m, edges, nodes[i], nodes[(i + 1) % n]);
      s += loop.edge_len[i];
    }
    loop.length = s;
    const auto* uses = edges.find(nodes[0], nodes[1]);
    loop.orientation = (uses->front().a == nodes[0]) ? +1 : -1;
    chart.offset.push_back(chart.size);
    chart.size += n;
    chart.loops.push_back(std::move(loop));
  }
  // Covers store Gamma_+ first, Gamma_- second.
  if (m.is_cover() && chart.num_loops() == 2) {
    chart.loops[0].sigma = +1;
    chart.loops[1].sigma = -1;
  }
  return chart;
}

}  // namespace dnmap
