#pragma once

// P1 finite elements for the Laplace-Beltrami operator of a per-triangle
// metric, the Dirichlet solve, and the Schur-complement DN operator.

#include "dnmap/chart.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace dnmap {

namespace detail {

// Gradients of the three hat functions in edge-frame coordinates (xi1, xi2).
inline const Eigen::Matrix<Real, 3, 2>& hat_gradients() {
  static const Eigen::Matrix<Real, 3, 2> d = (Eigen::Matrix<Real, 3, 2>() << -1, -1, 1, 0, 0, 1).finished();
  return d;
}

}  // namespace detail

/// Element stiffness area * D G^{-1} D^T. Off-diagonal entries are the
/// anisotropic generalisation of the cotangent weights.
inline Eigen::Matrix3d element_stiffness(const Eigen::Matrix2d& g) {
  const auto& d = detail::hat_gradients();
  return triangle_area(g) * d * g.inverse() * d.transpose();
}

inline Eigen::SparseMatrix<Real> assemble_stiffness(const SurfaceMesh& m) {
  std::vector<Eigen::Triplet<Real>> trip;
  trip.reserve(9 * m.triangles.size());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Eigen::Matrix3d k = element_stiffness(m.metric[t]);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(m.triangles[t][a], m.triangles[t][b], k(a, b));
  }
  Eigen::SparseMatrix<Real> a(m.num_vertices(), m.num_vertices());
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

/// Consistent P1 mass matrix of the boundary curves (tridiagonal-cyclic per loop).
inline MatrixX boundary_mass(const BoundaryChart& chart) {
  MatrixX mass = MatrixX::Zero(chart.size, chart.size);
  for (int j = 0; j < chart.num_loops(); ++j) {
    const auto& loop = chart.loops[j];
    const int n = chart.loop_size(j), o = chart.offset[j];
    for (int i = 0; i < n; ++i) {
      const int a = o + i, b = o + (i + 1) % n;
      const Real l = loop.edge_len[i];
      mass(a, a) += l / 3;
      mass(b, b) += l / 3;
      mass(a, b) += l / 6;
      mass(b, a) += l / 6;
    }
  }
  return mass;
}

/// Lumped boundary mass (nodal arc-length weights), diagnostics only.
inline VectorX lumped_boundary_mass(const BoundaryChart& chart) {
  VectorX w = VectorX::Zero(chart.size);
  for (int j = 0; j < chart.num_loops(); ++j) {
    const int n = chart.loop_size(j), o = chart.offset[j];
    for (int i = 0; i < n; ++i) {
      w[o + i] += 0.5 * chart.loops[j].edge_len[i];
      w[o + (i + 1) % n] += 0.5 * chart.loops[j].edge_len[i];
    }
  }
  return w;
}

struct HarmonicSolution {
  VectorX values;                          // on all vertices
  std::vector<Eigen::Vector2d> gradients;  // per triangle, edge-frame components
};

/// Per-triangle gradient of a P1 function, as edge-frame vector components.
inline std::vector<Eigen::Vector2d> p1_gradients(const SurfaceMesh& m, const VectorX& u) {
  const auto& d = detail::hat_gradients();
  std::vector<Eigen::Vector2d> out(m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Triangle& tri = m.triangles[t];
    const Eigen::Vector3d ul(u[tri[0]], u[tri[1]], u[tri[2]]);
    out[t] = m.metric[t].inverse() * (d.transpose() * ul);
  }
  return out;
}

/// Factorised interior problem of one mesh; reused for many Dirichlet solves.
class DirichletSolver {
 public:
  explicit DirichletSolver(const SurfaceMesh& mesh) : mesh_(&mesh), chart_(make_chart(mesh)) {
    const int nv = mesh.num_vertices();
    bidx_ = chart_.index_of_vertex(nv);
    iidx_.assign(nv, -1);
    for (int v = 0; v < nv; ++v)
      if (bidx_[v] < 0) {
        iidx_[v] = static_cast<int>(interior_.size());
        interior_.push_back(v);
      }
    const auto a = assemble_stiffness(mesh);
    const int ni = num_interior(), nb = chart_.size;
    std::vector<Eigen::Triplet<Real>> tii, tib, tbb;
    for (int k = 0; k < a.outerSize(); ++k) {
      for (Eigen::SparseMatrix<Real>::InnerIterator it(a, k); it; ++it) {
        const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
        if (iidx_[r] >= 0 && iidx_[c] >= 0) tii.emplace_back(iidx_[r], iidx_[c], it.value());
        else if (iidx_[r] >= 0) tib.emplace_back(iidx_[r], bidx_[c], it.value());
        else if (iidx_[c] < 0) tbb.emplace_back(bidx_[r], bidx_[c], it.value());
      }
    }
    aii_.resize(ni, ni);
    aii_.setFromTriplets(tii.begin(), tii.end());
    aib_.resize(ni, nb);
    aib_.setFromTriplets(tib.begin(), tib.end());
    abb_.resize(nb, nb);
    abb_.setFromTriplets(tbb.begin(), tbb.end());
    stiffness_ = a;
    if (ni > 0) {
      ldlt_.compute(aii_);
      if (ldlt_.info() != Eigen::Success) throw Error("singular interior stiffness block");
      const VectorX dvec = ldlt_.vectorD();
      const Real dmax = dvec.cwiseAbs().maxCoeff(), dmin = dvec.cwiseAbs().minCoeff();
      if (!(dmin > 1e-14 * dmax)) throw Error("singular interior stiffness block (disconnected interior?)");
      pivot_ratio_ = dmax / dmin;
    }
  }

  int num_interior() const { return static_cast<int>(interior_.size()); }
  const BoundaryChart& chart() const { return chart_; }
  const SurfaceMesh& mesh() const { return *mesh_; }
  const Eigen::SparseMatrix<Real>& stiffness() const { return stiffness_; }
  Real pivot_ratio() const { return pivot_ratio_; }

  /// Nodal values of the discrete harmonic extension of boundary data f.
  VectorX extend(const VectorX& f) const {
    if (f.size() != chart_.size) throw Error("boundary data size does not match the boundary chart");
    VectorX u(mesh_->num_vertices());
    for (int i = 0; i < chart_.size; ++i) u[chart_.vertex(i)] = f[i];
    if (num_interior() > 0) {
      const VectorX ui = ldlt_.solve(-(aib_ * f));
      for (int k = 0; k < num_interior(); ++k) u[interior_[k]] = ui[k];
    }
    return u;
  }

  VectorXc extend(const VectorXc& f) const {
    const VectorX re = extend(VectorX(f.real())), im = extend(VectorX(f.imag()));
    VectorXc u(re.size());
    u.real() = re;
    u.imag() = im;
    return u;
  }

  /// Dense Schur complement A_bb - A_bi A_ii^{-1} A_ib.
  MatrixX schur_complement() const {
    MatrixX s = MatrixX(abb_);
    if (num_interior() > 0) {
      const MatrixX x = ldlt_.solve(MatrixX(aib_));
      s -= MatrixX(aib_.transpose()) * x;
    }
    return s;
  }

  /// Interior residual max |(A u)_i| for nodal values u.
  Real interior_residual(const VectorX& u) const {
    const VectorX r = stiffness_ * u;
    Real m = 0;
    for (int v : interior_) m = std::max(m, std::abs(r[v]));
    return m;
  }

 private:
  const SurfaceMesh* mesh_;
  BoundaryChart chart_;
  std::vector<int> bidx_, iidx_, interior_;
  Eigen::SparseMatrix<Real> stiffness_, aii_, aib_, abb_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Real>> ldlt_;
  Real pivot_ratio_ = 1;
};

inline HarmonicSolution solve_dirichlet(const SurfaceMesh& m, const VectorX& f) {
  DirichletSolver solver(m);
  HarmonicSolution sol;
  sol.values = solver.extend(f);
  sol.gradients = p1_gradients(m, sol.values);
  return sol;
}

struct DnOperator {
  MatrixX lambda;  // boundary Dirichlet values -> boundary Neumann values
  MatrixX mass;    // consistent boundary mass
  MatrixX energy;  // mass * lambda, the Schur complement
  BoundaryChart chart;
  std::string warning;

  int size() const { return static_cast<int>(lambda.rows()); }
  VectorX apply(const VectorX& f) const { return lambda * f; }
  VectorXc apply(const VectorXc& f) const { return lambda.cast<Complex>() * f; }
  /// Mass inner product (f, g) on the boundary.
  Real inner(const VectorX& f, const VectorX& g) const { return f.dot(mass * g); }
  Real norm(const VectorX& f) const { return std::sqrt(std::max(0.0, inner(f, f))); }
};

inline constexpr Real kIllConditionedPivotRatio = 1e12;

inline DnOperator assemble_dn(const DirichletSolver& solver) {
  DnOperator dn;
  dn.chart = solver.chart();
  if (dn.chart.num_loops() < 1) throw Error("DN assembly requires at least one boundary loop");
  dn.energy = solver.schur_complement();
  dn.mass = boundary_mass(dn.chart);
  dn.lambda = dn.mass.llt().solve(dn.energy);
  if (solver.pivot_ratio() > kIllConditionedPivotRatio) {
    std::ostringstream msg;
    msg << "interior stiffness is ill-conditioned (pivot ratio " << solver.pivot_ratio() << ")";
    dn.warning = msg.str();
  }
  return dn;
}

inline DnOperator assemble_dn(const SurfaceMesh& m) {
  DirichletSolver solver(m);
  return assemble_dn(solver);
}

/// Eigenvalues of lambda in the mass inner product, ascending.
inline VectorX dn_spectrum(const DnOperator& dn) {
  MatrixX s = 0.5 * (dn.energy + dn.energy.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixX> es(s, dn.mass, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// --- gradient fields ---------------------------------------------------------

/// 90-degree rotation in the metric of a coherently oriented triangle, acting
/// on edge-frame vector components: Phi = sqrt(det G) G^{-1} [0 -1; 1 0].
inline Eigen::Matrix2d rotation(const Eigen::Matrix2d& g) {
  Eigen::Matrix2d a;
  a << 0, -1, 1, 0;
  return std::sqrt(g.determinant()) * g.inverse() * a;
}

inline Real metric_inner(const Eigen::Matrix2d& g, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.dot(g * b);
}

struct GradientField {
  std::vector<Eigen::Vector2d> gradient;
  std::vector<Eigen::Vector2d> rotated;  // empty unless requested
};

inline GradientField gradient_field(const SurfaceMesh& m, const HarmonicSolution& sol, bool with_rotation) {
  GradientField out;
  out.gradient = sol.gradients.empty() ? p1_gradients(m, sol.values) : sol.gradients;
  if (!with_rotation) return out;
  if (!is_orientable(m)) throw Error("rotated gradient requested on a non-orientable mesh");
  if (!is_coherently_oriented(m)) throw Error("rotated gradient needs coherently oriented triangles");
  out.rotated.resize(out.gradient.size());
  for (int t = 0; t < m.num_triangles(); ++t) out.rotated[t] = rotation(m.metric[t]) * out.gradient[t];
  return out;
}

/// Area-weighted L2 norm of a per-triangle vector field.
inline Real field_norm(const SurfaceMesh& m, const std::vector<Eigen::Vector2d>& v) {
  Real s = 0;
  for (int t = 0; t < m.num_triangles(); ++t) s += triangle_area(m.metric[t]) * metric_inner(m.metric[t], v[t], v[t]);
  return std::sqrt(s);
}

inline Real field_inner(const SurfaceMesh& m, const std::vector<Eigen::Vector2d>& a,
                        const std::vector<Eigen::Vector2d>& b) {
  Real s = 0;
  for (int t = 0; t < m.num_triangles(); ++t) s += triangle_area(m.metric[t]) * metric_inner(m.metric[t], a[t], b[t]);
  return s;
}

}  // namespace dnmap
