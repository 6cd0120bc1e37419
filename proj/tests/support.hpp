#pragma once

#include "dnmap/pipeline.hpp"

#include <catch_amalgamated.hpp>

namespace dnmap::test {

inline SurfaceMesh surface(SurfaceKind kind, int resolution) {
  SurfaceParams p;
  p.kind = kind;
  p.resolution = resolution;
  if (kind == SurfaceKind::embedded_moebius) p.half_width = 0.4;
  return generate_surface(p);
}

inline const std::vector<SurfaceKind>& all_kinds() {
  static const std::vector<SurfaceKind> k{SurfaceKind::disk, SurfaceKind::annulus, SurfaceKind::flat_cylinder,
                                          SurfaceKind::flat_moebius, SurfaceKind::embedded_moebius};
  return k;
}

inline Real max_abs(const VectorX& v) { return v.cwiseAbs().maxCoeff(); }

/// Relative mass-norm distance of two traces.
inline Real rel_error(const DnOperator& dn, const VectorX& a, const VectorX& b) {
  return dn.norm(a - b) / std::max(dn.norm(b), 1e-300);
}

/// Base chart values of a function of the boundary vertex positions.
template <class F>
VectorX sample(const SurfaceMesh& m, const BoundaryChart& chart, F f) {
  VectorX v(chart.size);
  for (int i = 0; i < chart.size; ++i) v[i] = f(m.vertices[chart.vertex(i)]);
  return v;
}

}  // namespace dnmap::test
