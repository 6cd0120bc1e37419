#pragma once

// Orientability from the DN operator alone.
//
// Single boundary loop: the surface is orientable iff I + (Lambda J)^2 has a
// kernel on mean-zero traces. Any number of loops: orientable iff the system
//   f' = -Lambda p,   p' = Lambda f
// has a nonconstant solution on one loop.
//
// On a non-orientable surface I + (Lambda J)^2 is smoothing, so its singular
// values still decay along the mode index; both tests therefore minimise over
// a band-limited trial space of trigonometric modes (k <= modes per loop) and
// rely on the refinement trend.

#include "dnmap/boundary_calculus.hpp"

#include <Eigen/SVD>

#include <functional>
#include <limits>

namespace dnmap {

namespace detail {

/// Columns of `cols` made orthonormal in the inner product x^T mass y.
inline MatrixX mass_orthonormalize(const MatrixX& cols, const MatrixX& mass, Real drop_tol = 1e-10) {
  const Eigen::LLT<MatrixX> llt(mass);
  const MatrixX y = llt.matrixU() * cols;  // M-inner products become Euclidean
  Eigen::ColPivHouseholderQR<MatrixX> qr(y);
  qr.setThreshold(drop_tol);
  const int rank = static_cast<int>(qr.rank());
  const MatrixX qy = MatrixX(qr.householderQ()).leftCols(rank);
  return llt.matrixU().solve(qy);
}

/// Applies a column operator to every column.
inline MatrixX apply_columns(const MatrixX& x, const std::function<VectorX(const VectorX&)>& op) {
  MatrixX out(x.rows(), x.cols());
  for (int c = 0; c < x.cols(); ++c) out.col(c) = op(x.col(c));
  return out;
}

inline MatrixX mass_sqrt_upper(const MatrixX& mass) { return Eigen::LLT<MatrixX>(mass).matrixU(); }

}  // namespace detail

/// M-orthonormal basis of the mean-zero traces (per loop).
inline MatrixX mean_zero_basis(const DnOperator& dn) {
  const int n = dn.size();
  MatrixX cols = MatrixX::Identity(n, n);
  for (int c = 0; c < n; ++c) cols.col(c) = project_mean_zero(dn.chart, VectorX(cols.col(c)));
  return detail::mass_orthonormalize(cols, dn.mass);
}

/// M-orthonormal basis of the mean-zero trigonometric modes k = 1..modes on
/// every loop.
inline MatrixX trig_band_basis(const DnOperator& dn, int modes) {
  const auto& chart = dn.chart;
  std::vector<VectorX> cols;
  for (int j = 0; j < chart.num_loops(); ++j) {
    const int kmax = std::min(modes, (chart.loop_size(j) - 1) / 2);
    for (int k = 1; k <= kmax; ++k)
      for (bool sine : {false, true}) cols.push_back(project_mean_zero(chart, trig_mode(chart, j, k, sine)));
  }
  MatrixX m(dn.size(), static_cast<int>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<int>(c)) = cols[c];
  return detail::mass_orthonormalize(m, dn.mass);
}

/// x -> x + (Lambda J)^2 x.
inline VectorX apply_kernel_operator(const DnOperator& dn, const VectorX& x) {
  const VectorX y = dn.lambda * integrate_J(dn.chart, x);
  return x + dn.lambda * integrate_J(dn.chart, y);
}

struct KernelTestResult {
  Real sigma_min = 0;      // smallest singular value on the trial band / ||K||
  Real sigma_min_raw = 0;  // smallest singular value on the trial band
  Real k_norm = 0;         // ||K|| on all mean-zero traces, mass norm
  VectorX fdot;            // minimiser, unit mass norm
  VectorX pdot;            // Lambda J fdot
  int trial_dimension = 0;
};

struct KernelTestOptions {
  int modes = 2;  // trigonometric trial modes per loop
};

inline KernelTestResult kernel_test(const DnOperator& dn, const KernelTestOptions& opt = {}) {
  if (dn.chart.num_loops() != 1)
    throw Error("kernel_test applies to a single boundary loop; use hamiltonian_test for several loops");
  if (opt.modes < 1) throw Error("kernel_test needs at least one trial mode");
  const MatrixX u = detail::mass_sqrt_upper(dn.mass);
  auto op = [&](const VectorX& x) { return apply_kernel_operator(dn, x); };

  KernelTestResult r;
  const MatrixX full = mean_zero_basis(dn);
  const Eigen::JacobiSVD<MatrixX> svd_full(u * detail::apply_columns(full, op));
  r.k_norm = svd_full.singularValues()[0];

  const MatrixX band = trig_band_basis(dn, opt.modes);
  r.trial_dimension = static_cast<int>(band.cols());
  const Eigen::JacobiSVD<MatrixX> svd(u * detail::apply_columns(band, op), Eigen::ComputeThinV);
  const int last = static_cast<int>(svd.singularValues().size()) - 1;
  r.sigma_min_raw = svd.singularValues()[last];
  r.sigma_min = r.k_norm > 0 ? r.sigma_min_raw / r.k_norm : 0;
  r.fdot = band * svd.matrixV().col(last);
  r.pdot = dn.lambda * integrate_J(dn.chart, r.fdot);
  return r;
}

// --- Hamiltonian system -----------------------------------------------------

struct HamiltonianDiagnostics {
  Real orthogonality = 0;  // || f'p' + Lambda f Lambda p || on the loop, relative
  Real equal_length = 0;   // || f'^2 + (Lambda f)^2 - p'^2 - (Lambda p)^2 ||, relative
};

struct HamiltonianTestResult {
  Real residual = 0;        // hamiltonian_residual of the minimiser on the requested loop
  Real total_residual = 0;  // sqrt of the minimised objective, all loops, unit total norm
  std::vector<Real> per_loop;
  VectorX f, p;
  HamiltonianDiagnostics diagnostics;
  int trial_dimension = 0;
};

namespace detail {

inline MatrixX loop_mass(const DnOperator& dn, int j) {
  MatrixX m = MatrixX::Zero(dn.size(), dn.size());
  const int o = dn.chart.offset[j], n = dn.chart.loop_size(j);
  m.block(o, o, n, n) = dn.mass.block(o, o, n, n);
  return m;
}

inline HamiltonianDiagnostics conjugacy_diagnostics(const DnOperator& dn, int j, const VectorX& f, const VectorX& p) {
  const auto& chart = dn.chart;
  const VectorX fd = tangential_derivative(chart, f), pd = tangential_derivative(chart, p);
  const VectorX lf = dn.lambda * f, lp = dn.lambda * p;
  const int o = chart.offset[j], n = chart.loop_size(j);
  const VectorX w = lumped_boundary_mass(chart).segment(o, n);
  auto l2 = [&](const VectorX& v) { return std::sqrt((w.array() * v.array().square()).sum()); };
  const VectorX a = (fd.segment(o, n).array() * pd.segment(o, n).array() + lf.segment(o, n).array() * lp.segment(o, n).array()).matrix();
  const VectorX gf = (fd.segment(o, n).array().square() + lf.segment(o, n).array().square()).matrix();
  const VectorX gp = (pd.segment(o, n).array().square() + lp.segment(o, n).array().square()).matrix();
  const Real scale = std::max(l2(gf) + l2(gp), 1e-300);
  return {2 * l2(a) / scale, l2(gf - gp) / scale};
}

}  // namespace detail

/// Normalised residual of system (f, p) on loop j:
///   (l_j / 2 pi) * sqrt( (||f' + Lambda p||_j^2 + ||p' - Lambda f||_j^2) / (||f||_j^2 + ||p||_j^2) )
/// where ||.||_j is the mass norm restricted to loop j.
inline Real hamiltonian_residual(const DnOperator& dn, int j, const VectorX& f, const VectorX& p) {
  if (j < 0 || j >= dn.chart.num_loops()) throw Error("loop index out of range");
  const MatrixX mj = detail::loop_mass(dn, j);
  const VectorX r1 = tangential_derivative(dn.chart, f) + dn.lambda * p;
  const VectorX r2 = tangential_derivative(dn.chart, p) - dn.lambda * f;
  const Real num = r1.dot(mj * r1) + r2.dot(mj * r2);
  const Real den = f.dot(mj * f) + p.dot(mj * p);
  if (!(den > 0)) throw Error("hamiltonian residual: (f, p) vanish on the loop");
  return dn.chart.loops[j].length / (2 * kPi) * std::sqrt(num / den);
}

struct HamiltonianTestOptions {
  int modes = 8;  // trigonometric trial modes per loop
};

/// Minimises the residual of the system over pairs (f, p) drawn from per-loop
/// indicators and trigonometric modes with the global constant removed from
/// both. The system is imposed on every loop: with a loop-local objective the
/// other loops can absorb the residual through the (injective) cross-loop
/// coupling of Lambda, which makes the minimum vanish on any surface. `j`
/// selects the loop whose residual and diagnostics are reported.
inline HamiltonianTestResult hamiltonian_test(const DnOperator& dn, int j, const HamiltonianTestOptions& opt = {}) {
  const auto& chart = dn.chart;
  if (j < 0 || j >= chart.num_loops()) throw Error("loop index out of range");
  const VectorX one = VectorX::Ones(dn.size());
  const Real one_norm2 = one.dot(dn.mass * one);
  auto deflate = [&](const VectorX& v) -> VectorX { return v - (one.dot(dn.mass * v) / one_norm2) * one; };
  std::vector<VectorX> cols;
  for (int l = 0; l < chart.num_loops(); ++l) {
    if (chart.num_loops() > 1) cols.push_back(deflate(chart.indicator(l)));
    const int kmax = std::min(opt.modes, (chart.loop_size(l) - 1) / 2);
    for (int k = 1; k <= kmax; ++k)
      for (bool sine : {false, true}) cols.push_back(deflate(trig_mode(chart, l, k, sine)));
  }
  MatrixX raw(dn.size(), static_cast<int>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) raw.col(static_cast<int>(c)) = cols[c];
  const MatrixX t = detail::mass_orthonormalize(raw, dn.mass);
  const int m = static_cast<int>(t.cols());

  const MatrixX dt = detail::apply_columns(t, [&](const VectorX& x) { return tangential_derivative(chart, x); });
  const MatrixX lt = dn.lambda * t;
  // Coefficients (a, c) of f = T a, p = T c.
  MatrixX r1(dn.size(), 2 * m), r2(dn.size(), 2 * m);
  r1 << dt, lt;
  r2 << -lt, dt;
  MatrixX q = MatrixX::Zero(2 * m, 2 * m);
  for (int l = 0; l < chart.num_loops(); ++l) {
    const Real scale = chart.loops[l].length / (2 * kPi);
    const MatrixX ml = detail::loop_mass(dn, l);
    q += scale * scale * (r1.transpose() * ml * r1 + r2.transpose() * ml * r2);
  }
  q = 0.5 * (q + q.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixX> es(q);
  const VectorX x = es.eigenvectors().col(0);

  HamiltonianTestResult r;
  r.trial_dimension = 2 * m;
  r.f = t * x.head(m);
  r.p = t * x.tail(m);
  r.total_residual = std::sqrt(std::max(0.0, es.eigenvalues()[0]));
  for (int l = 0; l < chart.num_loops(); ++l) {
    const MatrixX ml = detail::loop_mass(dn, l);
    if (r.f.dot(ml * r.f) + r.p.dot(ml * r.p) > 0) r.per_loop.push_back(hamiltonian_residual(dn, l, r.f, r.p));
    else r.per_loop.push_back(std::numeric_limits<Real>::infinity());
  }
  r.residual = r.per_loop[j];
  r.diagnostics = detail::conjugacy_diagnostics(dn, j, r.f, r.p);
  return r;
}

/// Per-loop integrals of Lambda f.
inline VectorX component_mean_check(const DnOperator& dn, const VectorX& f) {
  return component_integrals(dn.chart, VectorX(dn.lambda * f));
}

// --- decision layer -----------------------------------------------------------

enum class Orientation { orientable, nonorientable, inconclusive };

inline std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::orientable: return "orientable";
    case Orientation::nonorientable: return "nonorientable";
    case Orientation::inconclusive: return "inconclusive";
  }
  return "?";
}

struct LevelRecord {
  Real h = 0;
  int boundary_nodes = 0;
  int loops = 0;
  Real sigma_min = -1;                   // kernel test, single loop only
  std::vector<Real> hamiltonian_residual;  // per loop
  std::vector<Real> component_means;     // |int Lambda f| / ||Lambda f|| for the minimiser of the best loop
};

struct Thresholds {
  Real eps_orient = 1e-3;
  Real eps_nonorient = 5e-2;
  Real decrease_ratio = 1.5;  // required decrease per refinement level
};

struct OrientabilityReport {
  std::vector<LevelRecord> levels;
  Orientation decision = Orientation::inconclusive;
  Thresholds thresholds;
  std::string measure;  // "kernel" or "hamiltonian"
};

/// The obstruction measured at one level: sigma_min for one loop, otherwise
/// the largest per-loop Hamiltonian residual of the minimising pair.
inline Real level_measure(const LevelRecord& r) {
  if (r.loops == 1 && r.sigma_min >= 0) return r.sigma_min;
  Real m = 0;
  for (Real v : r.hamiltonian_residual) m = std::max(m, v);
  return m;
}

inline Orientation decide(const std::vector<LevelRecord>& levels, const Thresholds& th) {
  if (levels.size() < 2) return Orientation::inconclusive;
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i].loops != levels[0].loops) throw Error("refinement levels have inconsistent boundary charts");
  bool decreasing = true, bounded_below = true;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const Real v = level_measure(levels[i]);
    if (v < th.eps_nonorient) bounded_below = false;
    if (i > 0 && !(level_measure(levels[i - 1]) >= th.decrease_ratio * v)) decreasing = false;
  }
  if (decreasing && level_measure(levels.back()) < th.eps_orient) return Orientation::orientable;
  if (bounded_below) return Orientation::nonorientable;
  return Orientation::inconclusive;
}

struct OrientabilityOptions {
  KernelTestOptions kernel;
  HamiltonianTestOptions hamiltonian;
  Thresholds thresholds;
};

inline LevelRecord evaluate_level(const DnOperator& dn, Real h, const OrientabilityOptions& opt) {
  LevelRecord r;
  r.h = h;
  r.boundary_nodes = dn.size();
  r.loops = dn.chart.num_loops();
  if (r.loops == 1) r.sigma_min = kernel_test(dn, opt.kernel).sigma_min;
  const HamiltonianTestResult best_result = hamiltonian_test(dn, 0, opt.hamiltonian);
  r.hamiltonian_residual = best_result.per_loop;
  const VectorX lf = dn.lambda * best_result.f;
  const VectorX means = component_integrals(dn.chart, lf);
  const Real scale = std::max(dn.norm(lf), 1e-300);
  for (int j = 0; j < means.size(); ++j) r.component_means.push_back(std::abs(means[j]) / scale);
  return r;
}

inline OrientabilityReport orientability_report(const std::vector<DnOperator>& levels, const std::vector<Real>& hs,
                                                const OrientabilityOptions& opt) {
  OrientabilityReport rep;
  rep.thresholds = opt.thresholds;
  for (std::size_t i = 0; i < levels.size(); ++i) rep.levels.push_back(evaluate_level(levels[i], hs[i], opt));
  rep.measure = (!levels.empty() && levels[0].chart.num_loops() == 1) ? "kernel" : "hamiltonian";
  rep.decision = decide(rep.levels, opt.thresholds);
  return rep;
}

}  // namespace dnmap
