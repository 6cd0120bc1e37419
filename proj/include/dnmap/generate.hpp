#pragma once

#include "dnmap/mesh.hpp"

#include <string_view>

namespace dnmap {

enum class SurfaceKind { disk, annulus, flat_cylinder, flat_moebius, embedded_moebius };

inline std::string_view to_string(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::disk: return "disk";
    case SurfaceKind::annulus: return "annulus";
    case SurfaceKind::flat_cylinder: return "flat_cylinder";
    case SurfaceKind::flat_moebius: return "flat_moebius";
    case SurfaceKind::embedded_moebius: return "embedded_moebius";
  }
  return "?";
}

inline SurfaceKind surface_kind_from_string(std::string_view s) {
  for (auto k : {SurfaceKind::disk, SurfaceKind::annulus, SurfaceKind::flat_cylinder, SurfaceKind::flat_moebius,
                 SurfaceKind::embedded_moebius})
    if (s == to_string(k)) return k;
  throw Error("unknown surface kind '" + std::string(s) + "'");
}

inline bool is_moebius(SurfaceKind k) {
  return k == SurfaceKind::flat_moebius || k == SurfaceKind::embedded_moebius;
}

/// Shape parameters. Which fields matter depends on the kind:
///   disk              radius; resolution = number of rings
///   annulus           inner_radius, radius; resolution = radial layers
///   flat_cylinder     length (circumference), half_width; resolution = rows across
///   flat_moebius      length (centre-line length L), half_width; resolution = rows across (even)
///   embedded_moebius  radius (centre-line radius), half_width; resolution = rows across (even)
struct SurfaceParams {
  SurfaceKind kind = SurfaceKind::disk;
  Real radius = 1.0;
  Real inner_radius = 0.5;
  Real length = 2 * kPi;
  Real half_width = 1.0;
  int resolution = 8;
};

/// Nominal mesh size of a generated surface.
inline Real nominal_mesh_size(const SurfaceParams& p) {
  switch (p.kind) {
    case SurfaceKind::disk: return p.radius / p.resolution;
    case SurfaceKind::annulus: return (p.radius - p.inner_radius) / p.resolution;
    default: return 2 * p.half_width / p.resolution;
  }
}

namespace detail {

inline void orient_ccw_2d(SurfaceMesh& m) {
  for (auto& t : m.triangles) {
    const Eigen::Vector3d e1 = m.vertices[t[1]] - m.vertices[t[0]];
    const Eigen::Vector3d e2 = m.vertices[t[2]] - m.vertices[t[0]];
    if (e1.x() * e2.y() - e1.y() * e2.x() < 0) std::swap(t[1], t[2]);
  }
}

inline void euclidean_metric(SurfaceMesh& m) {
  m.metric.clear();
  for (const auto& t : m.triangles)
    m.metric.push_back(euclidean_gram(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]));
}

inline int round_even(Real x, int min_value) {
  int n = static_cast<int>(std::lround(x / 2.0)) * 2;
  return std::max(n, min_value);
}

inline SurfaceMesh make_disk(const SurfaceParams& p) {
  SurfaceMesh m;
  const int rings = p.resolution;
  std::vector<int> ring_start{0};
  m.vertices.push_back(Eigen::Vector3d::Zero());
  for (int k = 1; k <= rings; ++k) {
    ring_start.push_back(m.num_vertices());
    const int count = 6 * k;
    const Real r = p.radius * k / rings;
    for (int i = 0; i < count; ++i) {
      const Real a = 2 * kPi * i / count;
      m.vertices.emplace_back(r * std::cos(a), r * std::sin(a), 0.0);
    }
  }
  for (int i = 0; i < 6; ++i) m.triangles.push_back({0, 1 + i, 1 + (i + 1) % 6});
  // Zip consecutive rings together by angular order.
  for (int k = 2; k <= rings; ++k) {
    const int ni = 6 * (k - 1), no = 6 * k;
    const int si = ring_start[k - 1], so = ring_start[k];
    int i = 0, o = 0;
    while (i < ni || o < no) {
      const Real next_inner = static_cast<Real>(i + 1) / ni;
      const Real next_outer = static_cast<Real>(o + 1) / no;
      if (o < no && (i >= ni || next_outer <= next_inner)) {
        m.triangles.push_back({si + i % ni, so + o, so + (o + 1) % no});
        ++o;
      } else {
        m.triangles.push_back({si + i, so + o % no, si + (i + 1) % ni});
        ++i;
      }
    }
  }
  orient_ccw_2d(m);
  euclidean_metric(m);
  return m;
}

inline SurfaceMesh make_annulus(const SurfaceParams& p) {
  SurfaceMesh m;
  const int nr = p.resolution;
  const Real h = (p.radius - p.inner_radius) / nr;
  const int nt = round_even(2 * kPi * p.radius / h, 8);
  for (int j = 0; j <= nr; ++j) {
    const Real r = p.inner_radius + j * h;
    for (int i = 0; i < nt; ++i) {
      const Real a = 2 * kPi * i / nt;
      m.vertices.emplace_back(r * std::cos(a), r * std::sin(a), 0.0);
    }
  }
  auto id = [nt](int i, int j) { return j * nt + (i % nt); };
  for (int j = 0; j < nr; ++j) {
    for (int i = 0; i < nt; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  orient_ccw_2d(m);
  euclidean_metric(m);
  return m;
}

/// Structured grid on the cylinder [0, C) x [-w, w] with `around` columns and
/// `across` rows. Quads in the lower half are split along one diagonal and in
/// the upper half along the other, so (s, t) -> (s + C/2, -t) maps triangles
/// to triangles whenever `around` and `across` are even.
struct CylinderGrid {
  int around = 0;
  int across = 0;
  std::vector<Triangle> triangles;
  std::vector<std::array<Eigen::Vector2d, 3>> corners;  // unwrapped (s, t) per triangle corner

  int id(int i, int j) const { return j * around + ((i % around) + around) % around; }
};

inline CylinderGrid cylinder_grid(Real circumference, Real half_width, int around, int across) {
  CylinderGrid g;
  g.around = around;
  g.across = across;
  const Real ds = circumference / around, dt = 2 * half_width / across;
  auto st = [&](int i, int j) { return Eigen::Vector2d(i * ds, -half_width + j * dt); };
  for (int j = 0; j < across; ++j) {
    for (int i = 0; i < around; ++i) {
      const int a = g.id(i, j), b = g.id(i + 1, j), c = g.id(i + 1, j + 1), d = g.id(i, j + 1);
      const auto pa = st(i, j), pb = st(i + 1, j), pc = st(i + 1, j + 1), pd = st(i, j + 1);
      if (2 * j < across) {
        g.triangles.push_back({a, b, c});
        g.corners.push_back({pa, pb, pc});
        g.triangles.push_back({a, c, d});
        g.corners.push_back({pa, pc, pd});
      } else {
        g.triangles.push_back({a, b, d});
        g.corners.push_back({pa, pb, pd});
        g.triangles.push_back({b, c, d});
        g.corners.push_back({pb, pc, pd});
      }
    }
  }
  return g;
}

inline SurfaceMesh make_flat_cylinder(const SurfaceParams& p) {
  const int across = p.resolution;
  const Real h = 2 * p.half_width / across;
  const int around = std::max(8, static_cast<int>(std::lround(p.length / h)));
  CylinderGrid g = cylinder_grid(p.length, p.half_width, around, across);
  SurfaceMesh m;
  for (int j = 0; j <= across; ++j)
    for (int i = 0; i < around; ++i) m.vertices.emplace_back(i * p.length / around, -p.half_width + j * h, 0.0);
  m.triangles = g.triangles;
  for (const auto& c : g.corners) m.metric.push_back(euclidean_gram(c[0], c[1], c[2]));
  return m;
}

/// Centre-line-parametrised ruled Moebius embedding; invariant under
/// (theta, v) -> (theta + 2 pi, -v).
inline Eigen::Vector3d moebius_embedding(Real radius, Real theta, Real v) {
  const Real r = radius + v * std::cos(theta / 2);
  return {r * std::cos(theta), r * std::sin(theta), v * std::sin(theta / 2)};
}

/// The band is the quotient of a structured cylinder of circumference 2L by
/// (s, t) -> (s + L, -t). Base vertex (i, j), 0 <= i < n, is the image of cover
/// vertex (i, j); cover vertex (i + n, j) maps to base vertex (i, across - j).
inline SurfaceMesh make_moebius(const SurfaceParams& p, bool embedded) {
  const int across = p.resolution;
  if (across % 2 != 0) throw Error("moebius resolution (rows across) must be even");
  const Real L = embedded ? 2 * kPi * p.radius : p.length;
  const Real h = 2 * p.half_width / across;
  const int n = std::max(4, static_cast<int>(std::lround(L / h)));
  CylinderGrid g = cylinder_grid(2 * L, p.half_width, 2 * n, across);

  auto project = [&](int cover_id) {
    const int i = cover_id % (2 * n), j = cover_id / (2 * n);
    return i < n ? j * n + i : (across - j) * n + (i - n);
  };
  SurfaceMesh m;
  for (int j = 0; j <= across; ++j) {
    for (int i = 0; i < n; ++i) {
      const Real s = i * L / n, t = -p.half_width + j * h;
      if (embedded) {
        m.vertices.push_back(moebius_embedding(p.radius, 2 * kPi * s / L, t));
      } else {
        m.vertices.emplace_back(s, t, 0.0);
      }
    }
  }
  m.coord_dim = embedded ? 3 : 2;
  for (std::size_t k = 0; k < g.triangles.size(); ++k) {
    const Triangle& t = g.triangles[k];
    const int column = std::min({t[0] % (2 * n), t[1] % (2 * n), t[2] % (2 * n)});
    const bool wraps = std::max({t[0] % (2 * n), t[1] % (2 * n), t[2] % (2 * n)}) - column > 1;
    // Keep one triangle per tau-orbit: the one in cover columns [0, n).
    if (wraps || column >= n) continue;
    m.triangles.push_back({project(t[0]), project(t[1]), project(t[2])});
    const auto& c = g.corners[k];
    if (embedded) {
      auto x = [&](const Eigen::Vector2d& st) { return moebius_embedding(p.radius, 2 * kPi * st.x() / L, st.y()); };
      m.metric.push_back(euclidean_gram(x(c[0]), x(c[1]), x(c[2])));
    } else {
      m.metric.push_back(euclidean_gram(c[0], c[1], c[2]));
    }
  }
  std::vector<int> loop;
  for (int i = 0; i < 2 * n; ++i) loop.push_back(project(g.id(i, 0)));
  m.boundary_loops.push_back(std::move(loop));
  return m;
}

}  // namespace detail

inline SurfaceMesh generate_surface(const SurfaceParams& p) {
  if (p.resolution < 4) throw Error("resolution must be at least 4 subdivisions per direction");
  SurfaceMesh m;
  switch (p.kind) {
    case SurfaceKind::disk:
      if (!(p.radius > 0)) throw Error("disk radius must be positive");
      m = detail::make_disk(p);
      break;
    case SurfaceKind::annulus:
      if (!(p.inner_radius > 0) || !(p.radius > p.inner_radius))
        throw Error("annulus needs 0 < inner_radius < radius");
      m = detail::make_annulus(p);
      break;
    case SurfaceKind::flat_cylinder:
      if (!(p.length > 0) || !(p.half_width > 0)) throw Error("cylinder length and half_width must be positive");
      m = detail::make_flat_cylinder(p);
      break;
    case SurfaceKind::flat_moebius:
      if (!(p.length > 0) || !(p.half_width > 0)) throw Error("moebius length and half_width must be positive");
      return detail::make_moebius(p, false);
    case SurfaceKind::embedded_moebius:
      if (!(p.radius > 0) || !(p.half_width > 0)) throw Error("moebius radius and half_width must be positive");
      if (!(p.half_width < p.radius)) throw Error("embedded moebius needs half_width < radius");
      return detail::make_moebius(p, true);
  }
  m.boundary_loops = extract_boundary_loops(m.triangles, m.num_vertices());
  return m;
}

}  // namespace dnmap
