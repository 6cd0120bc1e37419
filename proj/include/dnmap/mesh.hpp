#pragma once

// Triangulated 2-manifolds with a per-triangle metric.
//
// The metric of a triangle (v0, v1, v2) is stored as the Gram matrix of its
// edge frame e1 = v1 - v0, e2 = v2 - v0:
//
//   G = [ g(e1,e1)  g(e1,e2) ]
//       [ g(e1,e2)  g(e2,e2) ]
//
// This is equivalent to prescribing the three edge lengths, so the metric is
// intrinsic and does not depend on the reference coordinates at all.

#include "dnmap/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace dnmap {

using Triangle = std::array<int, 3>;

struct SurfaceMesh {
  std::vector<Eigen::Vector3d> vertices;
  int coord_dim = 2;
  std::vector<Triangle> triangles;
  std::vector<Eigen::Matrix2d> metric;
  std::vector<std::vector<int>> boundary_loops;
  std::optional<std::vector<int>> involution;
  std::optional<std::vector<int>> projection;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  bool is_cover() const { return involution.has_value(); }
};

// --- per-triangle metric helpers -------------------------------------------

/// Squared edge lengths {|v0v1|^2, |v0v2|^2, |v1v2|^2} of a Gram matrix.
inline std::array<Real, 3> edge_lengths2(const Eigen::Matrix2d& g) {
  return {g(0, 0), g(1, 1), g(0, 0) + g(1, 1) - 2.0 * g(0, 1)};
}

inline Eigen::Matrix2d gram_from_lengths2(Real l01, Real l02, Real l12) {
  Eigen::Matrix2d g;
  g(0, 0) = l01;
  g(1, 1) = l02;
  g(0, 1) = g(1, 0) = 0.5 * (l01 + l02 - l12);
  return g;
}

/// Gram matrix of a triangle given corner positions in a Euclidean space.
template <class V>
Eigen::Matrix2d euclidean_gram(const V& p0, const V& p1, const V& p2) {
  const auto e1 = (p1 - p0).eval();
  const auto e2 = (p2 - p0).eval();
  Eigen::Matrix2d g;
  g(0, 0) = e1.dot(e1);
  g(1, 1) = e2.dot(e2);
  g(0, 1) = g(1, 0) = e1.dot(e2);
  return g;
}

/// Squared g-length of the edge between local corners a and b.
inline Real local_edge_length2(const Eigen::Matrix2d& g, int a, int b) {
  const auto l = edge_lengths2(g);
  if (a > b) std::swap(a, b);
  if (a == 0 && b == 1) return l[0];
  if (a == 0 && b == 2) return l[1];
  return l[2];
}

/// Gram matrix of the same triangle with its corners relabelled so that new
/// corner i is old corner perm[i].
inline Eigen::Matrix2d permute_gram(const Eigen::Matrix2d& g, const std::array<int, 3>& perm) {
  return gram_from_lengths2(local_edge_length2(g, perm[0], perm[1]),
                            local_edge_length2(g, perm[0], perm[2]),
                            local_edge_length2(g, perm[1], perm[2]));
}

inline Real triangle_area(const Eigen::Matrix2d& g) {
  return 0.5 * std::sqrt(std::max(0.0, g.determinant()));
}

// --- topology ----------------------------------------------------------------

struct EdgeUse {
  int tri;
  int a;  // directed as it appears in the triangle: a -> b
  int b;
};

class EdgeMap {
 public:
  EdgeMap(const std::vector<Triangle>& tris, int num_vertices) : n_(num_vertices) {
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      for (int k = 0; k < 3; ++k) {
        const int a = tris[t][k];
        const int b = tris[t][(k + 1) % 3];
        uses_[detail::edge_key(a, b, n_)].push_back({t, a, b});
      }
    }
  }

  const std::vector<EdgeUse>* find(int a, int b) const {
    auto it = uses_.find(detail::edge_key(a, b, n_));
    return it == uses_.end() ? nullptr : &it->second;
  }

  const std::unordered_map<std::int64_t, std::vector<EdgeUse>>& all() const { return uses_; }
  std::size_t num_edges() const { return uses_.size(); }

 private:
  int n_;
  std::unordered_map<std::int64_t, std::vector<EdgeUse>> uses_;
};

inline int euler_characteristic(const SurfaceMesh& m) {
  EdgeMap edges(m.triangles, m.num_vertices());
  return m.num_vertices() - static_cast<int>(edges.num_edges()) + m.num_triangles();
}

/// Greedy orientation propagation. Returns per-triangle flip flags making all
/// triangles coherent, or nullopt when propagation hits a contradiction
/// (the surface is non-orientable).
inline std::optional<std::vector<bool>> propagate_orientation(const std::vector<Triangle>& tris,
                                                              int num_vertices) {
  EdgeMap edges(tris, num_vertices);
  const int nt = static_cast<int>(tris.size());
  std::vector<int> state(nt, -1);  // -1 unvisited, 0 keep, 1 flip
  for (int seed = 0; seed < nt; ++seed) {
    if (state[seed] >= 0) continue;
    state[seed] = 0;
    std::queue<int> queue;
    queue.push(seed);
    while (!queue.empty()) {
      const int t = queue.front();
      queue.pop();
      for (int k = 0; k < 3; ++k) {
        int a = tris[t][k], b = tris[t][(k + 1) % 3];
        if (state[t] == 1) std::swap(a, b);
        for (const EdgeUse& use : *edges.find(a, b)) {
          if (use.tri == t) continue;
          // Coherent neighbours traverse the shared edge in opposite order.
          const bool same_direction = (use.a == a && use.b == b);
          const int wanted = same_direction ? 1 : 0;
          if (state[use.tri] < 0) {
            state[use.tri] = wanted;
            queue.push(use.tri);
          } else if (state[use.tri] != wanted) {
            return std::nullopt;
          }
        }
      }
    }
  }
  std::vector<bool> flips(nt);
  for (int t = 0; t < nt; ++t) flips[t] = state[t] == 1;
  return flips;
}

inline bool is_orientable(const SurfaceMesh& m) {
  return propagate_orientation(m.triangles, m.num_vertices()).has_value();
}

/// True when the stored vertex order of every triangle is already coherent.
inline bool is_coherently_oriented(const SurfaceMesh& m) {
  EdgeMap edges(m.triangles, m.num_vertices());
  for (const auto& [key, uses] : edges.all()) {
    if (uses.size() == 2 && uses[0].a == uses[1].a) return false;
  }
  return true;
}

/// Un-ordered boundary edges grouped into closed vertex cycles. Each cycle is
/// directed along the triangle direction of its first edge and starts at its
/// smallest vertex index.
inline std::vector<std::vector<int>> extract_boundary_loops(const std::vector<Triangle>& tris,
                                                            int num_vertices) {
  EdgeMap edges(tris, num_vertices);
  std::unordered_map<int, std::vector<int>> nbr;
  std::unordered_map<std::int64_t, bool> forward;  // edge (a<b) used as a->b by its triangle
  for (const auto& [key, uses] : edges.all()) {
    if (uses.size() > 2) throw Error("non-manifold edge in triangulation");
    if (uses.size() != 1) continue;
    nbr[uses[0].a].push_back(uses[0].b);
    nbr[uses[0].b].push_back(uses[0].a);
    forward[key] = uses[0].a < uses[0].b;
  }
  std::vector<int> starts;
  for (const auto& [v, ns] : nbr) {
    if (ns.size() != 2) throw Error("boundary vertex " + std::to_string(v) + " is not on a simple cycle");
    starts.push_back(v);
  }
  std::sort(starts.begin(), starts.end());
  std::unordered_map<int, bool> seen;
  std::vector<std::vector<int>> loops;
  for (int s : starts) {
    if (seen[s]) continue;
    std::vector<int> loop{s};
    seen[s] = true;
    // Step in the direction the owning triangle uses for edge (s, next).
    int a = nbr[s][0], b = nbr[s][1];
    const bool fa = forward[detail::edge_key(s, a, num_vertices)] == (s < a);
    int prev = s, cur = fa ? a : b;
    while (cur != s) {
      loop.push_back(cur);
      seen[cur] = true;
      const auto& ns = nbr[cur];
      const int next = ns[0] == prev ? ns[1] : ns[0];
      prev = cur;
      cur = next;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

/// Checks every SurfaceMesh invariant and throws Error with the first failure.
inline void validate(const SurfaceMesh& m, Real tol = 1e-9) {
  const int nv = m.num_vertices();
  if (m.metric.size() != m.triangles.size()) throw Error("metric count does not match triangle count");
  for (int t = 0; t < m.num_triangles(); ++t) {
    for (int v : m.triangles[t])
      if (v < 0 || v >= nv) throw Error("triangle " + std::to_string(t) + " references a missing vertex");
    const Eigen::Matrix2d& g = m.metric[t];
    if (std::abs(g(0, 1) - g(1, 0)) > tol * g.norm()) throw Error("metric of triangle " + std::to_string(t) + " is not symmetric");
    if (g(0, 0) <= 0 || g.determinant() <= 0) throw Error("metric of triangle " + std::to_string(t) + " is not positive definite");
  }
  EdgeMap edges(m.triangles, nv);
  for (const auto& loop : m.boundary_loops) {
    if (loop.size() < 3) throw Error("boundary loop with fewer than 3 vertices");
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const auto* uses = edges.find(loop[i], loop[(i + 1) % loop.size()]);
      if (uses == nullptr || uses->size() != 1) throw Error("boundary loop contains a non-boundary edge");
    }
  }
  if (m.involution) {
    const auto& tau = *m.involution;
    if (static_cast<int>(tau.size()) != nv) throw Error("involution size mismatch");
    for (int v = 0; v < nv; ++v) {
      if (tau[v] == v) throw Error("involution has a fixed vertex " + std::to_string(v));
      if (tau[tau[v]] != v) throw Error("involution is not an involution at vertex " + std::to_string(v));
    }
    for (int t = 0; t < m.num_triangles(); ++t) {
      const Triangle& tri = m.triangles[t];
      const auto* uses = edges.find(tau[tri[0]], tau[tri[1]]);
      int image = -1;
      if (uses) {
        for (const auto& u : *uses) {
          const Triangle& cand = m.triangles[u.tri];
          if (std::find(cand.begin(), cand.end(), tau[tri[2]]) != cand.end()) image = u.tri;
        }
      }
      if (image < 0) throw Error("involution does not map triangle " + std::to_string(t) + " to a triangle");
      for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
          const Triangle& img = m.triangles[image];
          const int a = static_cast<int>(std::find(img.begin(), img.end(), tau[tri[i]]) - img.begin());
          const int b = static_cast<int>(std::find(img.begin(), img.end(), tau[tri[j]]) - img.begin());
          const Real l0 = local_edge_length2(m.metric[t], i, j);
          const Real l1 = local_edge_length2(m.metric[image], a, b);
          if (std::abs(l0 - l1) > tol * std::max(l0, l1)) throw Error("metric is not invariant under the involution");
        }
      }
    }
  }
  if (m.projection) {
    const auto& pi = *m.projection;
    if (static_cast<int>(pi.size()) != nv) throw Error("projection size mismatch");
    std::unordered_map<int, int> count;
    for (int v = 0; v < nv; ++v) ++count[pi[v]];
    for (const auto& [b, c] : count)
      if (c != 2) throw Error("projection is not 2-to-1 at base vertex " + std::to_string(b));
    if (m.involution)
      for (int v = 0; v < nv; ++v)
        if (pi[(*m.involution)[v]] != pi[v]) throw Error("projection does not satisfy pi o tau = pi");
  }
}

}  // namespace dnmap
