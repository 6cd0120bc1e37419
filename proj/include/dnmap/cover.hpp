#pragma once

// Orientation double cover of a non-orientable surface and the transfer of
// boundary functions between the cover and its base.

#include "dnmap/chart.hpp"

namespace dnmap {

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(int a, int b) { parent_[find(a)] = find(b); }

 private:
  std::vector<int> parent_;
};

inline int corner_of(const Triangle& t, int v) {
  return static_cast<int>(std::find(t.begin(), t.end(), v) - t.begin());
}

}  // namespace detail

/// Builds the orientable double cover of a non-orientable mesh with one
/// boundary loop. Every base triangle t contributes two cover triangles: the
/// stored orientation and its reverse. Cover vertices are the classes of
/// (triangle copy, corner) glued across edges with coherent orientation, so
/// the construction is an exact index map.
///
/// The cover stores Gamma_+ as boundary loop 0 and Gamma_- as loop 1; Gamma_+
/// is the cover loop whose boundary direction projects onto the direction of
/// the base loop. Cover vertex coordinates are copies of the base coordinates.
inline SurfaceMesh build_double_cover(const SurfaceMesh& base) {
  if (is_orientable(base)) throw Error("double cover of orientable surface not supported");
  if (base.boundary_loops.size() != 1) throw Error("double cover needs exactly one boundary loop");

  const int nt = base.num_triangles();
  EdgeMap edges(base.triangles, base.num_vertices());
  auto item = [](int t, int sheet, int corner) { return (2 * t + sheet) * 3 + corner; };
  auto copy_vertices = [&](int t, int sheet) {
    Triangle tri = base.triangles[t];
    if (sheet == 1) std::swap(tri[1], tri[2]);
    return tri;
  };

  detail::UnionFind uf(6 * nt);
  for (int t = 0; t < nt; ++t) {
    for (int sheet = 0; sheet < 2; ++sheet) {
      const Triangle tri = copy_vertices(t, sheet);
      for (int k = 0; k < 3; ++k) {
        const int a = tri[k], b = tri[(k + 1) % 3];
        for (const EdgeUse& use : *edges.find(a, b)) {
          if (use.tri == t) continue;
          // The neighbour copy must traverse the edge as b -> a.
          const int other_sheet = (use.a == a) ? 1 : 0;
          const Triangle& ut = base.triangles[use.tri];
          uf.unite(item(t, sheet, detail::corner_of(base.triangles[t], a)),
                   item(use.tri, other_sheet, detail::corner_of(ut, a)));
          uf.unite(item(t, sheet, detail::corner_of(base.triangles[t], b)),
                   item(use.tri, other_sheet, detail::corner_of(ut, b)));
        }
      }
    }
  }

  std::unordered_map<int, int> class_id;
  std::vector<int> projection;
  auto cover_vertex = [&](int t, int sheet, int corner) {
    const int root = uf.find(item(t, sheet, corner));
    auto [it, inserted] = class_id.emplace(root, static_cast<int>(projection.size()));
    if (inserted) projection.push_back(base.triangles[t][corner]);
    return it->second;
  };

  SurfaceMesh cover;
  cover.coord_dim = base.coord_dim;
  for (int t = 0; t < nt; ++t) {
    for (int sheet = 0; sheet < 2; ++sheet) {
      Triangle tri;
      for (int k = 0; k < 3; ++k) tri[k] = cover_vertex(t, sheet, k);
      if (sheet == 1) std::swap(tri[1], tri[2]);
      cover.triangles.push_back(tri);
      cover.metric.push_back(sheet == 0 ? base.metric[t] : permute_gram(base.metric[t], {0, 2, 1}));
    }
  }
  const int nv = static_cast<int>(projection.size());
  if (nv != 2 * base.num_vertices()) throw Error("double cover construction failed: vertex stars are not discs");

  std::vector<int> involution(nv, -1);
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k) {
      const int a = cover_vertex(t, 0, k), b = cover_vertex(t, 1, k);
      if ((involution[a] >= 0 && involution[a] != b) || a == b)
        throw Error("double cover construction failed: sheet exchange is ill-defined");
      involution[a] = b;
      involution[b] = a;
    }
  }
  for (int v = 0; v < nv; ++v) cover.vertices.push_back(base.vertices[projection[v]]);

  auto loops = extract_boundary_loops(cover.triangles, nv);
  if (loops.size() != 2) throw Error("double cover does not have two boundary loops");
  const auto& base_loop = base.boundary_loops[0];
  const int nb = static_cast<int>(base_loop.size());
  std::unordered_map<int, int> base_pos;
  for (int i = 0; i < nb; ++i) base_pos[base_loop[i]] = i;
  auto projects_forward = [&](const std::vector<int>& loop) {
    const int i0 = base_pos.at(projection[loop[0]]);
    const int i1 = base_pos.at(projection[loop[1]]);
    return i1 == (i0 + 1) % nb;
  };
  std::vector<int> plus = projects_forward(loops[0]) ? loops[0] : loops[1];
  std::vector<int> minus = projects_forward(loops[0]) ? loops[1] : loops[0];
  if (!projects_forward(plus) || projects_forward(minus))
    throw Error("double cover boundary loops do not project consistently");
  // Start Gamma_+ over the first base boundary node and Gamma_- at its tau image.
  auto rotate_to = [](std::vector<int>& loop, int v) {
    auto it = std::find(loop.begin(), loop.end(), v);
    if (it == loop.end()) throw Error("double cover boundary start vertex not found");
    std::rotate(loop.begin(), it, loop.end());
  };
  for (int v : plus) {
    if (projection[v] == base_loop[0]) {
      rotate_to(plus, v);
      break;
    }
  }
  rotate_to(minus, involution[plus[0]]);
  cover.boundary_loops = {plus, minus};
  cover.involution = std::move(involution);
  cover.projection = std::move(projection);
  return cover;
}

/// Boundary-node correspondences between a cover and its base.
struct CoverMap {
  BoundaryChart base_chart;
  BoundaryChart cover_chart;
  std::vector<int> to_base;  // cover chart index -> base chart index
  std::vector<int> tau;      // cover chart index -> cover chart index
  std::vector<int> sigma;    // +1 on Gamma_+, -1 on Gamma_-
  std::vector<int> projection;  // full vertex projection

  int cover_size() const { return cover_chart.size; }
  int base_size() const { return base_chart.size; }
};

inline CoverMap make_cover_map(const SurfaceMesh& base, const SurfaceMesh& cover) {
  if (!cover.involution || !cover.projection) throw Error("cover mesh has no involution/projection");
  CoverMap cm;
  cm.base_chart = make_chart(base);
  cm.cover_chart = make_chart(cover);
  if (cm.cover_chart.num_loops() != 2) throw Error("cover must have exactly two boundary loops");
  const auto base_idx = cm.base_chart.index_of_vertex(base.num_vertices());
  const auto cover_idx = cm.cover_chart.index_of_vertex(cover.num_vertices());
  const int n = cm.cover_chart.size;
  cm.to_base.resize(n);
  cm.tau.resize(n);
  cm.sigma.resize(n);
  for (int i = 0; i < n; ++i) {
    const int v = cm.cover_chart.vertex(i);
    cm.to_base[i] = base_idx[(*cover.projection)[v]];
    cm.tau[i] = cover_idx[(*cover.involution)[v]];
    cm.sigma[i] = cm.cover_chart.loops[cm.cover_chart.loop_of(i)].sigma;
    if (cm.to_base[i] < 0 || cm.tau[i] < 0) throw Error("cover boundary does not project onto base boundary");
  }
  cm.projection = *cover.projection;
  return cm;
}

enum class TransferDirection { lift, push_even, fold_odd };

/// Moves boundary data across the cover:
///   lift       base trace f        -> f o pi
///   push_even  tau-even cover trace -> base trace
///   fold_odd   cover trace sigma (q o pi) -> q
/// push_even and fold_odd reject input whose parity defect exceeds
/// tol * max|input|.
template <class Vec>
Vec transfer_function(TransferDirection dir, const Vec& f, const CoverMap& cm, Real tol = 1e-9) {
  const int n = cm.cover_size();
  if (dir == TransferDirection::lift) {
    if (f.size() != cm.base_size()) throw Error("lift expects a base boundary trace");
    Vec out(n);
    for (int i = 0; i < n; ++i) out[i] = f[cm.to_base[i]];
    return out;
  }
  if (f.size() != n) throw Error("expected a cover boundary trace");
  const Real scale = std::max<Real>(f.cwiseAbs().maxCoeff(), 1e-300);
  const Real parity = dir == TransferDirection::push_even ? 1.0 : -1.0;
  Real defect = 0;
  for (int i = 0; i < n; ++i) defect = std::max<Real>(defect, std::abs(f[i] - parity * f[cm.tau[i]]));
  if (defect > tol * scale) {
    std::ostringstream msg;
    msg << (dir == TransferDirection::push_even ? "push_even" : "fold_odd")
        << ": input has wrong parity (max parity defect " << defect << ")";
    throw Error(msg.str());
  }
  Vec out(cm.base_size());
  for (int i = 0; i < n; ++i) {
    if (cm.sigma[i] != +1) continue;
    out[cm.to_base[i]] = dir == TransferDirection::push_even ? f[i] : f[i] * static_cast<Real>(cm.sigma[i]);
  }
  return out;
}

/// u o pi for a function given on every base vertex.
template <class Vec>
Vec lift_nodal(const Vec& u, const CoverMap& cm) {
  Vec out(cm.projection.size());
  for (std::size_t v = 0; v < cm.projection.size(); ++v) out[v] = u[cm.projection[v]];
  return out;
}

}  // namespace dnmap
