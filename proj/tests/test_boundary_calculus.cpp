#include "support.hpp"

using namespace dnmap;
using namespace dnmap::test;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

BoundaryChart cylinder_chart(int res) {
  SurfaceParams p;
  p.kind = SurfaceKind::flat_cylinder;
  p.resolution = res;
  return make_chart(generate_surface(p));
}

VectorX of_arc(const BoundaryChart& c, const std::function<Real(Real, Real)>& f) {
  VectorX v(c.size);
  for (int j = 0; j < c.num_loops(); ++j)
    for (int i = 0; i < c.loop_size(j); ++i) v[c.offset[j] + i] = f(c.loops[j].arc[i], c.loops[j].length);
  return v;
}

}  // namespace

TEST_CASE("derivative of a constant is zero", "[boundary]") {
  const BoundaryChart c = make_chart(surface(SurfaceKind::annulus, 4));
  CHECK(tangential_derivative(c, VectorX(VectorX::Constant(c.size, 3.0))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("derivative of sin is cos with second order error", "[boundary]") {
  Real previous = 0;
  for (int res : {8, 16}) {
    const BoundaryChart c = cylinder_chart(res);
    auto f = [](Real s, Real l) { return std::sin(2 * kPi * s / l); };
    auto df = [](Real s, Real l) { return 2 * kPi / l * std::cos(2 * kPi * s / l); };
    const Real err = max_abs(tangential_derivative(c, of_arc(c, f)) - of_arc(c, df));
    if (previous > 0) CHECK(previous / err > 3.5);
    previous = err;
  }
  CHECK(previous < 5e-3);
}

TEST_CASE("derivative of a lift is sigma times the lifted derivative", "[boundary][cover]") {
  const SurfaceMesh base = surface(SurfaceKind::flat_moebius, 8);
  const CoverMap cm = make_cover_map(base, build_double_cover(base));
  const VectorX f = trig_mode(cm.base_chart, 0, 2, true);
  const VectorX lhs = tangential_derivative(cm.cover_chart, transfer_function(TransferDirection::lift, f, cm));
  VectorX rhs = transfer_function(TransferDirection::lift, tangential_derivative(cm.base_chart, f), cm);
  for (int i = 0; i < rhs.size(); ++i) rhs[i] *= cm.sigma[i];
  CHECK(max_abs(lhs - rhs) < 1e-12 * max_abs(rhs));
}

TEST_CASE("J of cos is a scaled sin", "[boundary]") {
  const BoundaryChart c = cylinder_chart(16);
  auto f = [](Real s, Real l) { return std::cos(2 * kPi * s / l); };
  auto jf = [](Real s, Real l) { return l / (2 * kPi) * std::sin(2 * kPi * s / l); };
  CHECK(max_abs(integrate_J(c, of_arc(c, f)) - of_arc(c, jf)) < 1e-2);
}

TEST_CASE("J and the tangential derivative invert each other on mean-zero traces", "[boundary][property]") {
  Real previous = 0;
  for (int res : {8, 16}) {
    const BoundaryChart c = cylinder_chart(res);
    const DnOperator dn{MatrixX(), boundary_mass(c), MatrixX(), c, {}};
    Real err = 0;
    for (int k = 1; k <= 3; ++k) {
      const VectorX f = trig_mode(c, 0, k, false) + trig_mode(c, 1, k, true);
      err = std::max(err, rel_error(dn, integrate_J(c, tangential_derivative(c, f)), f));
      err = std::max(err, rel_error(dn, tangential_derivative(c, integrate_J(c, f)), f));
    }
    if (previous > 0) CHECK(previous / err > 3.0);
    previous = err;
  }
  CHECK(previous < 5e-2);
}

TEST_CASE("on the disk (Lambda J)^2 acts as minus the identity on Fourier modes", "[boundary]") {
  Real previous = 0;
  for (int rings : {8, 16}) {
    const DnOperator dn = assemble_dn(surface(SurfaceKind::disk, rings));
    const VectorX f = trig_mode(dn.chart, 0, 2, false);
    const VectorX once = dn.lambda * integrate_J(dn.chart, f);
    const VectorX twice = dn.lambda * integrate_J(dn.chart, once);
    const Real r = rel_error(dn, twice, VectorX(-f));
    if (previous > 0) CHECK(r < previous);
    previous = r;
  }
  CHECK(previous < 1e-2);
}

TEST_CASE("component integrals", "[boundary]") {
  const SurfaceMesh m = surface(SurfaceKind::annulus, 8);
  const DnOperator dn = assemble_dn(m);
  const VectorX ones = component_integrals(dn.chart, VectorX::Ones(dn.size()));
  for (int j = 0; j < dn.chart.num_loops(); ++j) CHECK_THAT(ones[j], WithinRel(dn.chart.loops[j].length, 1e-14));

  const VectorX g = of_arc(dn.chart, [](Real s, Real) { return s * s; });
  const VectorX lg = dn.lambda * g;
  CHECK(std::abs(component_integrals(dn.chart, lg).sum()) < 1e-10 * dn.norm(lg));

  for (int n = 1; n <= 3; ++n) {
    const VectorX f = sample(m, dn.chart, [n](const Eigen::Vector3d& p) { return std::pow(Complex(p.x(), p.y()), n).real(); });
    const VectorX lf = dn.lambda * f;
    const VectorX means = component_integrals(dn.chart, lf);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(means[j]) < 1e-8 * dn.norm(lf));
  }
}

TEST_CASE("sigma labels of a double cover chart", "[boundary][cover]") {
  const SurfaceMesh base = surface(SurfaceKind::flat_moebius, 6);
  const CoverMap cm = make_cover_map(base, build_double_cover(base));
  const VectorX s = sigma_labels(cm.cover_chart);
  for (int i = 0; i < s.size(); ++i) {
    CHECK(s[i] * s[i] == 1.0);
    CHECK(s[cm.tau[i]] == -s[i]);
    CHECK(s[i] == cm.sigma[i]);
  }
  CHECK(std::abs(VectorX::Ones(s.size()).dot(boundary_mass(cm.cover_chart) * s)) < 1e-12);
  CHECK_THROWS_WITH(sigma_labels(cm.base_chart), ContainsSubstring("exactly 2"));
}

TEST_CASE("J rejects traces with a mean and projects small defects", "[boundary][error]") {
  const BoundaryChart c = cylinder_chart(8);
  const VectorX f = trig_mode(c, 0, 1, false) + trig_mode(c, 1, 1, true);
  CHECK_THROWS_WITH(integrate_J(c, VectorX(f.array() + 1.0)), ContainsSubstring("J undefined off"));
  CHECK_NOTHROW(integrate_J(c, VectorX(f.array() + 1e-12)));
}

TEST_CASE("tangential derivative needs three nodes per loop", "[boundary][error]") {
  BoundaryChart c;
  BoundaryLoop l;
  l.nodes = {0, 1};
  l.arc = {0, 1};
  l.edge_len = {1, 1};
  l.length = 2;
  c.loops.push_back(l);
  c.offset = {0};
  c.size = 2;
  CHECK_THROWS_WITH(tangential_derivative(c, VectorX(VectorX::Zero(2))), ContainsSubstring("at least 3"));
  CHECK_THROWS_WITH(tangential_derivative(cylinder_chart(4), VectorX(VectorX::Zero(2))), ContainsSubstring("does not match"));
}

TEST_CASE("complex traces are handled component-wise", "[boundary][property]") {
  const BoundaryChart c = cylinder_chart(8);
  const VectorX a = trig_mode(c, 0, 1, false), b = trig_mode(c, 1, 2, true);
  VectorXc z(c.size);
  z.real() = a;
  z.imag() = b;
  const VectorXc dz = tangential_derivative(c, z);
  CHECK(max_abs(dz.real() - tangential_derivative(c, a)) < 1e-14);
  CHECK(max_abs(dz.imag() - tangential_derivative(c, b)) < 1e-14);
  const VectorXc jz = integrate_J(c, z);
  CHECK(max_abs(jz.real() - integrate_J(c, a)) < 1e-14);
}
