#pragma once

// Boundary operators on chart vectors: tangential derivative along gamma,
// the integration J on per-loop mean-zero functions, loop integrals and the
// sigma labels of a double cover. All operators are loop-local and work for
// real or complex samples.

#include "dnmap/fem.hpp"

namespace dnmap {

/// A complex boundary function on a chart.
struct TraceFunction {
  BoundaryChart chart;
  VectorXc values;

  auto loop(int j) { return values.segment(chart.offset[j], chart.loop_size(j)); }
  auto loop(int j) const { return values.segment(chart.offset[j], chart.loop_size(j)); }
};

inline constexpr Real kMeanZeroTolerance = 1e-8;

/// Per-loop integrals of f with respect to arc length (consistent P1 quadrature).
template <class Vec>
auto component_integrals(const BoundaryChart& chart, const Vec& f) {
  using S = typename Vec::Scalar;
  const VectorX w = lumped_boundary_mass(chart);
  Eigen::Matrix<S, Eigen::Dynamic, 1> out(chart.num_loops());
  for (int j = 0; j < chart.num_loops(); ++j) {
    const int o = chart.offset[j], n = chart.loop_size(j);
    out[j] = (w.segment(o, n).template cast<S>().array() * f.segment(o, n).array()).sum();
  }
  return out;
}

/// Removes the per-loop mean.
template <class Vec>
Vec project_mean_zero(const BoundaryChart& chart, Vec f) {
  using S = typename Vec::Scalar;
  const auto integrals = component_integrals(chart, f);
  for (int j = 0; j < chart.num_loops(); ++j)
    f.segment(chart.offset[j], chart.loop_size(j)).array() -= integrals[j] / S(chart.loops[j].length);
  return f;
}

/// Three-point derivative with respect to arc length along the loop
/// direction (second order on non-uniform spacing), projected to per-loop mean
/// zero.
template <class Vec>
Vec tangential_derivative(const BoundaryChart& chart, const Vec& f) {
  if (f.size() != chart.size) throw Error("trace size does not match the boundary chart");
  Vec out(f.size());
  for (int j = 0; j < chart.num_loops(); ++j) {
    const auto& loop = chart.loops[j];
    const int n = chart.loop_size(j), o = chart.offset[j];
    if (n < 3) throw Error("tangential derivative needs at least 3 nodes per loop");
    for (int i = 0; i < n; ++i) {
      const Real h1 = loop.edge_len[(i + n - 1) % n];
      const Real h2 = loop.edge_len[i];
      const auto fm = f[o + (i + n - 1) % n], f0 = f[o + i], fp = f[o + (i + 1) % n];
      out[o + i] = (h1 * h1 * (fp - f0) + h2 * h2 * (f0 - fm)) / (h1 * h2 * (h1 + h2));
    }
  }
  return project_mean_zero(chart, out);
}

/// Antiderivative J with d/ds J = id on per-loop mean-zero functions:
/// cumulative trapezoid, then re-centred to mean zero. Inputs whose relative
/// mean defect is at most `tol` are projected first; larger defects throw.
template <class Vec>
Vec integrate_J(const BoundaryChart& chart, const Vec& f, Real tol = kMeanZeroTolerance) {
  if (f.size() != chart.size) throw Error("trace size does not match the boundary chart");
  const auto integrals = component_integrals(chart, f);
  const VectorX w = lumped_boundary_mass(chart);
  for (int j = 0; j < chart.num_loops(); ++j) {
    const int o = chart.offset[j], n = chart.loop_size(j);
    const Real l1 = (w.segment(o, n).array() * f.segment(o, n).array().abs()).sum();
    if (std::abs(integrals[j]) > tol * std::max(l1, 1e-300) && std::abs(integrals[j]) > 1e-300) {
      std::ostringstream msg;
      msg << "J undefined off mean-zero traces: loop " << j << " has relative mean defect "
          << std::abs(integrals[j]) / l1;
      throw Error(msg.str());
    }
  }
  const Vec g = project_mean_zero(chart, f);
  Vec out(f.size());
  for (int j = 0; j < chart.num_loops(); ++j) {
    const auto& loop = chart.loops[j];
    const int n = chart.loop_size(j), o = chart.offset[j];
    out[o] = 0;
    for (int i = 1; i < n; ++i) out[o + i] = out[o + i - 1] + 0.5 * loop.edge_len[i - 1] * (g[o + i - 1] + g[o + i]);
  }
  return project_mean_zero(chart, out);
}

/// +1 on Gamma_+, -1 on Gamma_- of a double cover chart.
inline VectorX sigma_labels(const BoundaryChart& chart) {
  if (chart.num_loops() != 2) throw Error("sigma labels need a chart with exactly 2 loops");
  VectorX s(chart.size);
  for (int j = 0; j < 2; ++j) {
    const int sg = chart.loops[j].sigma;
    if (sg != 1 && sg != -1) throw Error("chart loops carry no sigma labels (not a double cover)");
    s.segment(chart.offset[j], chart.loop_size(j)).setConstant(sg);
  }
  return s;
}

/// Arc-length coordinate of every chart node.
inline VectorX arc_coordinates(const BoundaryChart& chart) {
  VectorX s(chart.size);
  for (int j = 0; j < chart.num_loops(); ++j)
    for (int i = 0; i < chart.loop_size(j); ++i) s[chart.offset[j] + i] = chart.loops[j].arc[i];
  return s;
}

/// cos / sin of mode k in the arc length of loop j, zero on the other loops.
inline VectorX trig_mode(const BoundaryChart& chart, int j, int k, bool sine) {
  VectorX v = VectorX::Zero(chart.size);
  const auto& loop = chart.loops[j];
  for (int i = 0; i < chart.loop_size(j); ++i) {
    const Real a = 2 * kPi * k * loop.arc[i] / loop.length;
    v[chart.offset[j] + i] = sine ? std::sin(a) : std::cos(a);
  }
  return v;
}

}  // namespace dnmap
