#include "support.hpp"

using namespace dnmap;
using namespace dnmap::test;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Max nodal error of the harmonic extension of the trace of `exact` on the unit disk.
template <class F>
Real disk_error(int rings, F exact) {
  const SurfaceMesh m = surface(SurfaceKind::disk, rings);
  const BoundaryChart c = make_chart(m);
  const HarmonicSolution u = solve_dirichlet(m, sample(m, c, exact));
  Real err = 0;
  for (int v = 0; v < m.num_vertices(); ++v) err = std::max(err, std::abs(u.values[v] - exact(m.vertices[v])));
  return err;
}

Eigen::Matrix<Real, 3, 2> edge_frame(const SurfaceMesh& m, int t) {
  const auto& tri = m.triangles[t];
  Eigen::Matrix<Real, 3, 2> e;
  e.col(0) = m.vertices[tri[1]] - m.vertices[tri[0]];
  e.col(1) = m.vertices[tri[2]] - m.vertices[tri[0]];
  return e;
}

}  // namespace

TEST_CASE("constants extend to constants", "[fem]") {
  const SurfaceMesh m = surface(SurfaceKind::disk, 6);
  const HarmonicSolution u = solve_dirichlet(m, VectorX::Constant(make_chart(m).size, 2.5));
  CHECK((u.values.array() - 2.5).abs().maxCoeff() < 1e-12);
}

TEST_CASE("harmonic extension of cos theta on the disk is r cos theta", "[fem]") {
  // Linear functions lie in the P1 space, so the nodal error is at rounding level.
  CHECK(disk_error(8, [](const Eigen::Vector3d& p) { return p.x(); }) < 1e-12);
}

TEST_CASE("harmonic extension of cos 2 theta on the disk converges at second order", "[fem]") {
  auto re_z2 = [](const Eigen::Vector3d& p) { return p.x() * p.x() - p.y() * p.y(); };
  const Real e1 = disk_error(8, re_z2), e2 = disk_error(16, re_z2);
  CHECK(e1 < 1e-2);
  CHECK(e1 / e2 > 3.0);
}

TEST_CASE("cylinder solution matches the separated solution", "[fem]") {
  SurfaceParams p;
  p.kind = SurfaceKind::flat_cylinder;
  const int n = 2;
  Real previous = 0;
  for (int res : {8, 16}) {
    p.resolution = res;
    const SurfaceMesh m = generate_surface(p);
    const BoundaryChart c = make_chart(m);
    const VectorX f = sample(m, c, [&](const Eigen::Vector3d& x) { return std::cos(n * x.x()); });
    const HarmonicSolution u = solve_dirichlet(m, f);
    Real err = 0;
    for (int v = 0; v < m.num_vertices(); ++v) {
      const Real exact = std::cos(n * m.vertices[v].x()) * std::cosh(n * m.vertices[v].y()) / std::cosh(n * p.half_width);
      err = std::max(err, std::abs(u.values[v] - exact));
    }
    if (previous > 0) CHECK(previous / err > 3.0);
    previous = err;
  }
  CHECK(previous < 5e-3);
}

TEST_CASE("discrete solution satisfies the interior equation and the boundary data", "[fem][property]") {
  for (SurfaceKind k : all_kinds()) {
    const SurfaceMesh m = surface(k, 8);
    const DirichletSolver solver(m);
    const VectorX f = trig_mode(solver.chart(), 0, 2, true);
    const VectorX u = solver.extend(f);
    CHECK(solver.interior_residual(u) < 1e-11);
    for (int i = 0; i < solver.chart().size; ++i) CHECK(u[solver.chart().vertex(i)] == f[i]);
  }
}

TEST_CASE("unit disk DN eigenvalues approach 0, 1, 1, 2, 2, ...", "[fem]") {
  const DnOperator dn = assemble_dn(surface(SurfaceKind::disk, 16));
  const VectorX ev = dn_spectrum(dn);
  CHECK(std::abs(ev[0]) < 1e-10);
  for (int k = 1; k <= 4; ++k) {
    CHECK_THAT(ev[2 * k - 1], WithinRel(Real(k), 0.02));
    CHECK_THAT(ev[2 * k], WithinRel(Real(k), 0.02));
  }
}

TEST_CASE("disk DN eigenvalue errors shrink at least twofold per halving of h", "[fem][property]") {
  const VectorX coarse = dn_spectrum(assemble_dn(surface(SurfaceKind::disk, 10)));
  const VectorX fine = dn_spectrum(assemble_dn(surface(SurfaceKind::disk, 20)));
  for (int n = 1; n <= 5; ++n) {
    INFO("mode " << n);
    const Real ec = std::abs(coarse[2 * n] - n) / n, ef = std::abs(fine[2 * n] - n) / n;
    CHECK(ec / ef >= 2.0);
  }
}

TEST_CASE("DN operator invariants on every surface kind", "[fem][property]") {
  for (SurfaceKind k : all_kinds()) {
    INFO(to_string(k));
    const DnOperator dn = assemble_dn(surface(k, 8));
    const Real scale = dn.energy.norm();
    CHECK((dn.energy - dn.energy.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale);
    CHECK((dn.lambda * VectorX::Ones(dn.size())).norm() <= 1e-10 * dn.lambda.norm());
    CHECK(dn_spectrum(dn).minCoeff() > -1e-10);
    // Green identity: every output of lambda has zero total mass-weighted sum.
    const VectorX f = VectorX::LinSpaced(dn.size(), -1, 1).array().square();
    const VectorX lf = dn.lambda * f;
    CHECK(std::abs(VectorX::Ones(dn.size()).dot(dn.mass * lf)) <= 1e-10 * dn.norm(lf));
    CHECK(dn.warning.empty());
  }
}

TEST_CASE("cylinder DN operator commutes with grid translation", "[fem]") {
  SurfaceParams p;
  p.kind = SurfaceKind::flat_cylinder;
  p.resolution = 6;
  const SurfaceMesh m = generate_surface(p);
  const DnOperator dn = assemble_dn(m);
  const auto& c = dn.chart;
  const int around = c.loop_size(0);
  const Real ds = p.length / around;
  // Permutation of chart indices induced by s -> s + ds.
  std::vector<int> perm(c.size);
  for (int i = 0; i < c.size; ++i) {
    const Eigen::Vector3d x = m.vertices[c.vertex(i)];
    const Real s = std::fmod(x.x() + ds, p.length);
    int best = -1;
    for (int k = 0; k < c.size; ++k) {
      const Eigen::Vector3d y = m.vertices[c.vertex(k)];
      const Real d = std::abs(std::remainder(y.x() - s, p.length)) + std::abs(y.y() - x.y());
      if (d < 1e-9) best = k;
    }
    REQUIRE(best >= 0);
    perm[i] = best;
  }
  MatrixX shifted(c.size, c.size);
  for (int i = 0; i < c.size; ++i)
    for (int j = 0; j < c.size; ++j) shifted(perm[i], perm[j]) = dn.lambda(i, j);
  CHECK((shifted - dn.lambda).norm() <= 1e-10 * dn.lambda.norm());
}

TEST_CASE("cover DN operator preserves parity", "[fem][cover][property]") {
  for (SurfaceKind k : {SurfaceKind::flat_moebius, SurfaceKind::embedded_moebius}) {
    const SurfaceMesh base = surface(k, 8);
    const SurfaceMesh cover = build_double_cover(base);
    const CoverMap cm = make_cover_map(base, cover);
    const DnOperator base_dn = assemble_dn(base), cover_dn = assemble_dn(cover);
    for (int mode = 1; mode <= 3; ++mode) {
      const VectorX f = trig_mode(cm.base_chart, 0, mode, mode % 2 == 0);
      const VectorX lhs = cover_dn.lambda * transfer_function(TransferDirection::lift, f, cm);
      const VectorX rhs = transfer_function(TransferDirection::lift, VectorX(base_dn.lambda * f), cm);
      CHECK(rel_error(cover_dn, lhs, rhs) < 1e-8);
    }
  }
}

TEST_CASE("rotated gradient of u = x is the unit vector in y", "[fem][gradient]") {
  const SurfaceMesh m = surface(SurfaceKind::disk, 4);
  HarmonicSolution u;
  u.values.resize(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) u.values[v] = m.vertices[v].x();
  const GradientField g = gradient_field(m, u, true);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto e = edge_frame(m, t);
    const Eigen::Vector3d grad = e * g.gradient[t], rot = e * g.rotated[t];
    CHECK((grad - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
    CHECK((rot - Eigen::Vector3d(0, 1, 0)).norm() < 1e-12);
  }
}

TEST_CASE("rotation is an isometry squaring to minus the identity", "[fem][gradient][property]") {
  const SurfaceMesh m = surface(SurfaceKind::annulus, 6);
  const VectorX f = trig_mode(make_chart(m), 0, 3, false);
  const HarmonicSolution u = solve_dirichlet(m, f);
  const GradientField g = gradient_field(m, u, true);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Eigen::Matrix2d phi = rotation(m.metric[t]);
    CHECK((phi * phi + Eigen::Matrix2d::Identity()).norm() < 1e-12);
    const Real a = metric_inner(m.metric[t], g.gradient[t], g.gradient[t]);
    CHECK_THAT(metric_inner(m.metric[t], g.rotated[t], g.rotated[t]), WithinAbs(a, 1e-12 * std::max(a, 1.0)));
  }
}

TEST_CASE("conjugate pair Re z^n, Im z^n satisfies Cauchy-Riemann to first order", "[fem][gradient]") {
  Real previous = 0;
  for (int rings : {8, 16}) {
    const SurfaceMesh m = surface(SurfaceKind::disk, rings);
    const BoundaryChart c = make_chart(m);
    auto zn = [](const Eigen::Vector3d& p) { return std::pow(Complex(p.x(), p.y()), 3); };
    const HarmonicSolution u = solve_dirichlet(m, sample(m, c, [&](const Eigen::Vector3d& p) { return zn(p).real(); }));
    const HarmonicSolution v = solve_dirichlet(m, sample(m, c, [&](const Eigen::Vector3d& p) { return zn(p).imag(); }));
    const auto gu = gradient_field(m, u, true), gv = gradient_field(m, v, false);
    std::vector<Eigen::Vector2d> diff(gu.rotated.size());
    for (std::size_t t = 0; t < diff.size(); ++t) diff[t] = gv.gradient[t] - gu.rotated[t];
    const Real r = field_norm(m, diff) / field_norm(m, gu.gradient);
    if (previous > 0) CHECK(previous / r > 1.6);
    previous = r;
  }
  CHECK(previous < 0.15);
}

TEST_CASE("rotated gradient on a non-orientable mesh is refused", "[fem][gradient][error]") {
  const SurfaceMesh m = surface(SurfaceKind::flat_moebius, 4);
  const HarmonicSolution u = solve_dirichlet(m, trig_mode(make_chart(m), 0, 1, false));
  CHECK_THROWS_WITH(gradient_field(m, u, true), ContainsSubstring("non-orientable"));
  CHECK_NOTHROW(gradient_field(m, u, false));
}

TEST_CASE("interior without Dirichlet data is singular", "[fem][error]") {
  SurfaceMesh m = surface(SurfaceKind::disk, 4);
  // Append a closed tetrahedron: its vertices are interior and unconstrained.
  const int o = m.num_vertices();
  const Eigen::Vector3d x[4] = {{5, 0, 0}, {6, 0, 0}, {5, 1, 0}, {5, 0, 1}};
  for (const auto& p : x) m.vertices.push_back(p);
  for (const Triangle& t : std::vector<Triangle>{{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}}) {
    m.triangles.push_back({o + t[0], o + t[1], o + t[2]});
    m.metric.push_back(euclidean_gram(x[t[0]], x[t[1]], x[t[2]]));
  }
  CHECK_THROWS_WITH(DirichletSolver(m), ContainsSubstring("singular interior stiffness block"));
}

TEST_CASE("boundary data of the wrong size is rejected", "[fem][error]") {
  const SurfaceMesh m = surface(SurfaceKind::disk, 4);
  CHECK_THROWS_WITH(solve_dirichlet(m, VectorX::Zero(3)), ContainsSubstring("does not match"));
}
