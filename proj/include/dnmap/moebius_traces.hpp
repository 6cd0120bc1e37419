#pragma once

// Traces of holomorphic functions on the orientation double cover of a Moebius
// band, built from the base DN operator alone, and the interior checks that
// validate them on an explicit cover.
//
// Observer side: BaseObserver holds nothing but the base DnOperator. Oracle
// side: OracleCover owns the cover mesh, its DN operator and its solver. Every
// function in this header takes exactly one of the two, so data the observer
// does not have can only be reached through an OracleCover argument.

#include "dnmap/boundary_calculus.hpp"
#include "dnmap/cover.hpp"

#include <memory>

namespace dnmap {

/// The observer's data: the DN operator of a surface with one boundary loop.
class BaseObserver {
 public:
  explicit BaseObserver(DnOperator base_dn) : dn_(std::move(base_dn)) {
    if (dn_.chart.num_loops() != 1) throw Error("observer expects the DN operator of a surface with one boundary loop");
  }
  const DnOperator& dn() const { return dn_; }
  const BoundaryChart& chart() const { return dn_.chart; }

 private:
  DnOperator dn_;
};

/// Interior access to the double cover of a base mesh. Used for cross-checks only.
class OracleCover {
 public:
  explicit OracleCover(const SurfaceMesh& base)
      : mesh_(std::make_unique<SurfaceMesh>(build_double_cover(base))),
        solver_(std::make_unique<DirichletSolver>(*mesh_)),
        map_(make_cover_map(base, *mesh_)),
        dn_(assemble_dn(*solver_)) {}

  const SurfaceMesh& mesh() const { return *mesh_; }
  const DirichletSolver& solver() const { return *solver_; }
  const CoverMap& map() const { return map_; }
  const DnOperator& dn() const { return dn_; }

 private:
  std::unique_ptr<SurfaceMesh> mesh_;
  std::unique_ptr<DirichletSolver> solver_;
  CoverMap map_;
  DnOperator dn_;
};

// --- the boundary of the cover as seen from the base -------------------------

/// Two copies of the base loop: Gamma_+ runs along the base loop, Gamma_- runs
/// against it and starts over the same base node. This matches the chart
/// ordering of build_double_cover index for index.
struct DoubledBoundary {
  BoundaryChart chart;
  std::vector<int> to_base;  // doubled index -> base index
  std::vector<int> tau;      // doubled index -> doubled index of the other sheet
  std::vector<int> sigma;    // +1 / -1
};

inline DoubledBoundary doubled_boundary(const BoundaryChart& base) {
  if (base.num_loops() != 1) throw Error("doubled boundary needs a single base loop");
  const BoundaryLoop& src = base.loops[0];
  const int n = base.loop_size(0);
  DoubledBoundary d;
  BoundaryLoop plus = src;
  plus.sigma = 1;
  BoundaryLoop minus;
  minus.sigma = -1;
  minus.orientation = src.orientation;
  minus.length = src.length;
  Real arc = 0;
  for (int k = 0; k < n; ++k) {
    minus.nodes.push_back(src.nodes[(n - k) % n]);
    minus.arc.push_back(arc);
    const Real e = src.edge_len[(2 * n - k - 1) % n];
    minus.edge_len.push_back(e);
    arc += e;
  }
  d.chart.loops = {plus, minus};
  d.chart.offset = {0, n};
  d.chart.size = 2 * n;
  d.to_base.resize(2 * n);
  d.tau.resize(2 * n);
  d.sigma.resize(2 * n);
  for (int k = 0; k < n; ++k) {
    d.to_base[k] = k;
    d.to_base[n + k] = (n - k) % n;
    d.tau[k] = n + (n - k) % n;
    d.tau[n + k] = (n - k) % n;
    d.sigma[k] = 1;
    d.sigma[n + k] = -1;
  }
  return d;
}

// --- generators --------------------------------------------------------------

/// cos and sin of 2 pi k s / l on the base loop, k = 1..modes (2 * modes traces).
inline std::vector<VectorX> trig_generators(const BoundaryChart& base, int modes) {
  if (modes < 1) throw Error("generator family needs at least one mode");
  std::vector<VectorX> out;
  for (int k = 1; k <= modes; ++k)
    for (bool sine : {false, true}) out.push_back(trig_mode(base, 0, k, sine));
  return out;
}

// --- observer ----------------------------------------------------------------

struct ObserverConstant {
  Real b = 0;
  Real constancy_residual = 0;   // |d|^2-weighted standard deviation of the pointwise ratio
  Real relative_constancy = 0;   // constancy_residual / (|b| + scale)
  Real scale = 0;                // mass norm of q
  int used_nodes = 0;
  int excluded_nodes = 0;
  VectorX pointwise;             // ratio at every node (NaN where excluded)
};

struct ObserverOptions {
  Real exclusion_threshold = 0.1;  // drop nodes with |d| < threshold * max|d|
};

namespace detail {

struct ObserverTerms {
  VectorX lambda_f, q, fdot, numerator, denominator;
};

inline ObserverTerms observer_terms(const DnOperator& dn, const VectorX& f) {
  ObserverTerms t;
  t.lambda_f = dn.lambda * f;
  t.q = integrate_J(dn.chart, t.lambda_f);
  t.fdot = tangential_derivative(dn.chart, f);
  const VectorX lf2 = dn.lambda * f.cwiseProduct(f);
  const VectorX lq2 = dn.lambda * t.q.cwiseProduct(t.q);
  t.numerator = 0.5 * (lf2 - lq2) - f.cwiseProduct(t.lambda_f) - t.q.cwiseProduct(t.fdot);
  t.denominator = t.fdot + dn.lambda * t.q;
  return t;
}

inline Real safe_ratio(Real num, Real den) { return num == 0 ? 0.0 : num / std::max(den, 1e-300); }

}  // namespace detail

/// The constant b of a Hermitian trace from the base DN operator only:
///   b = (1/2 [L f^2 - L q^2] - f L f - q f') / (f' + L q),   q = J L f,
/// averaged over the nodes where the denominator is not small.
inline ObserverConstant compute_b_observer(const BaseObserver& obs, const VectorX& f, const ObserverOptions& opt = {}) {
  const DnOperator& dn = obs.dn();
  if (f.size() != dn.size()) throw Error("generator size does not match the base boundary");
  const VectorX centred = project_mean_zero(dn.chart, f);
  if (!(dn.norm(centred) > 1e-12 * std::max(dn.norm(f), 1e-300)) || dn.norm(f) == 0)
    throw Error("compute_b_observer needs a nonconstant generator");
  const auto t = detail::observer_terms(dn, f);
  const VectorX w = lumped_boundary_mass(dn.chart);
  const Real dmax = t.denominator.cwiseAbs().maxCoeff();
  ObserverConstant r;
  r.pointwise = VectorX::Constant(dn.size(), std::numeric_limits<Real>::quiet_NaN());
  Real sw = 0, snd = 0;
  for (int i = 0; i < dn.size(); ++i) {
    const Real d = t.denominator[i];
    if (!(dmax > 0) || std::abs(d) < opt.exclusion_threshold * dmax) {
      ++r.excluded_nodes;
      continue;
    }
    ++r.used_nodes;
    r.pointwise[i] = t.numerator[i] / d;
    sw += w[i] * d * d;
    snd += w[i] * d * t.numerator[i];
  }
  if (r.used_nodes == 0 || !(sw > 0)) throw Error("denominator degenerate: is the surface orientable?");
  r.b = snd / sw;
  Real var = 0;
  for (int i = 0; i < dn.size(); ++i) {
    if (std::isnan(r.pointwise[i])) continue;
    const Real d = t.denominator[i];
    var += w[i] * d * d * (r.pointwise[i] - r.b) * (r.pointwise[i] - r.b);
  }
  r.constancy_residual = std::sqrt(var / sw);
  r.scale = dn.norm(t.q);
  r.relative_constancy = detail::safe_ratio(r.constancy_residual, std::abs(r.b) + r.scale);
  return r;
}

/// A boundary function on the doubled boundary. Hermitian elements come from
/// one generator f: trace = f o pi + i sigma (q o pi + b) with q = J L f.
/// A general element y + i z keeps its two Hermitian parts.
struct TraceElement {
  VectorX f;         // base generator (empty for products)
  VectorX q;         // J L f
  VectorX lambda_f;  // L f
  VectorX fdot;      // derivative of f along the base loop
  Real b = 0;
  ObserverConstant constant;
  DoubledBoundary boundary;
  TraceFunction trace;
  bool hermitian = false;
  std::vector<TraceElement> parts;  // y and z of a general element
};

inline TraceElement assemble_trace(const BaseObserver& obs, const VectorX& f, const ObserverOptions& opt = {}) {
  const DnOperator& dn = obs.dn();
  TraceElement e;
  e.constant = compute_b_observer(obs, f, opt);
  const auto t = detail::observer_terms(dn, f);
  e.f = f;
  e.q = t.q;
  e.lambda_f = t.lambda_f;
  e.fdot = t.fdot;
  e.b = e.constant.b;
  e.boundary = doubled_boundary(dn.chart);
  e.trace.chart = e.boundary.chart;
  e.trace.values.resize(e.boundary.chart.size);
  for (int i = 0; i < e.boundary.chart.size; ++i) {
    const int k = e.boundary.to_base[i];
    e.trace.values[i] = Complex(f[k], e.boundary.sigma[i] * (e.q[k] + e.b));
  }
  e.hermitian = true;
  return e;
}

/// General element y + i z from two generators.
inline TraceElement assemble_trace(const BaseObserver& obs, const VectorX& f, const VectorX& f2,
                                   const ObserverOptions& opt = {}) {
  TraceElement y = assemble_trace(obs, f, opt), z = assemble_trace(obs, f2, opt);
  TraceElement e;
  e.boundary = y.boundary;
  e.trace.chart = y.trace.chart;
  e.trace.values = y.trace.values + Complex(0, 1) * z.trace.values;
  e.hermitian = false;
  e.parts = {std::move(y), std::move(z)};
  return e;
}

/// Pointwise product of two traces on the same doubled boundary.
inline TraceElement multiply(const TraceElement& a, const TraceElement& b) {
  if (a.trace.values.size() != b.trace.values.size()) throw Error("traces live on different boundaries");
  TraceElement e;
  e.boundary = a.boundary;
  e.trace.chart = a.trace.chart;
  e.trace.values = a.trace.values.cwiseProduct(b.trace.values);
  e.hermitian = a.hermitian && b.hermitian;
  return e;
}

/// max |w o tau - conj(w)| / max |w|.
inline Real involution_defect(const TraceElement& e) {
  const auto& v = e.trace.values;
  Real d = 0;
  for (int i = 0; i < v.size(); ++i) d = std::max(d, std::abs(v[e.boundary.tau[i]] - std::conj(v[i])));
  return detail::safe_ratio(d, v.cwiseAbs().maxCoeff());
}

// --- oracle ------------------------------------------------------------------

/// The harmonic function with data +1 on Gamma_+ and -1 on Gamma_- on the cover.
struct NeumannFieldData {
  HarmonicSolution phi;
  std::vector<Eigen::Vector2d> rotated;  // Phi grad phi, spans the Neumann fields
  Real energy = 0;                       // ||grad phi||^2
  VectorX flux;                          // L phi on the cover chart
  Real antisymmetry_defect = 0;          // max |phi + phi o tau|
};

inline NeumannFieldData neumann_field_phi(const OracleCover& oc) {
  const auto& chart = oc.dn().chart;
  VectorX data(chart.size);
  for (int i = 0; i < chart.size; ++i) data[i] = oc.map().sigma[i];
  NeumannFieldData nf;
  nf.phi.values = oc.solver().extend(data);
  nf.phi.gradients = p1_gradients(oc.mesh(), nf.phi.values);
  nf.rotated = gradient_field(oc.mesh(), nf.phi, true).rotated;
  nf.energy = nf.phi.values.dot(oc.solver().stiffness() * nf.phi.values);
  nf.flux = oc.dn().lambda * data;
  const auto& tau = *oc.mesh().involution;
  for (int v = 0; v < oc.mesh().num_vertices(); ++v)
    nf.antisymmetry_defect = std::max(nf.antisymmetry_defect, std::abs(nf.phi.values[v] + nf.phi.values[tau[v]]));
  if (!(nf.energy > 0)) throw Error("neumann field has zero energy");
  return nf;
}

inline constexpr Real kMinNeumannEnergy = 1e-12;

/// c = (int_{Gamma_+} L F - int_{Gamma_-} L F) / ||grad phi||^2 for a trace F on the cover chart.
inline Real compute_c_oracle(const OracleCover& oc, const VectorX& F, const NeumannFieldData& nf) {
  if (F.size() != oc.dn().size()) throw Error("trace size does not match the cover boundary");
  if (nf.energy < kMinNeumannEnergy) throw Error("||grad phi||^2 below tolerance");
  const auto& chart = oc.dn().chart;
  const VectorX flux = oc.dn().energy * F;  // mass-weighted L F
  Real plus = 0, minus = 0;
  for (int i = 0; i < chart.size; ++i) (oc.map().sigma[i] > 0 ? plus : minus) += flux[i];
  return (plus - minus) / nf.energy;
}

/// b = -int_{Gamma_+} (q o pi) L phi / int_{Gamma_+} L phi, with q o pi
/// obtained from the cover DN operator.
inline Real compute_b_oracle(const OracleCover& oc, const VectorX& f, const NeumannFieldData& nf) {
  const auto& cm = oc.map();
  if (f.size() != cm.base_size()) throw Error("generator size does not match the base boundary");
  const auto& chart = oc.dn().chart;
  const VectorX lifted = transfer_function(TransferDirection::lift, f, cm);
  // L of an even trace has zero mean on each loop; what is left is roundoff.
  const VectorX lf = project_mean_zero(chart, VectorX(oc.dn().lambda * lifted));
  const VectorX q = integrate_J(chart, lf);  // J acts per loop; Gamma_+ carries q o pi
  if (nf.flux.size() != chart.size) throw Error("Neumann field data does not match the cover");
  const VectorX weighted_flux = oc.dn().mass * nf.flux;
  const int o = chart.offset[0], n = chart.loop_size(0);
  const Real den = weighted_flux.segment(o, n).sum();
  const Real scale = weighted_flux.segment(o, n).cwiseAbs().sum();
  if (!(std::abs(den) > 1e-12 * std::max(scale, 1e-300))) throw Error("flux of phi through Gamma_+ vanishes");
  return -q.segment(o, n).dot(weighted_flux.segment(o, n)) / den;
}

/// Values of an element in the chart order of the oracle cover.
inline VectorXc trace_on_cover(const TraceElement& e, const OracleCover& oc) {
  const auto& cm = oc.map();
  std::vector<int> index(static_cast<std::size_t>(2 * cm.base_size()), -1);
  for (int i = 0; i < e.boundary.chart.size; ++i)
    index[static_cast<std::size_t>(e.boundary.to_base[i] * 2 + (e.boundary.sigma[i] > 0 ? 0 : 1))] = i;
  VectorXc out(cm.cover_size());
  for (int i = 0; i < cm.cover_size(); ++i) {
    const int k = index[static_cast<std::size_t>(cm.to_base[i] * 2 + (cm.sigma[i] > 0 ? 0 : 1))];
    if (k < 0) throw Error("oracle cover boundary does not match the doubled boundary");
    out[i] = e.trace.values[k];
  }
  return out;
}

struct ConjugacyCheck {
  Real cr_residual = 0;          // ||grad u^p - Phi grad u^f|| / ||grad u^f||
  Real derivative_residual = 0;  // ||p' - (L_g f) o pi|| / ||(L_g f) o pi||
  Real parity_defect = 0;        // max |u^p + u^p o tau| / max |u^p|
  Real flux_identity = 0;        // ||L p + sigma f' o pi|| / ||f' o pi||
  Real max_modulus_excess = 0;   // (max_interior |w| - max_boundary |w|)_+ / max_boundary |w|
};

/// Solves both Dirichlet problems of a Hermitian element on the oracle cover.
inline ConjugacyCheck verify_conjugate_pair(const OracleCover& oc, const TraceElement& e) {
  if (!e.hermitian || e.f.size() == 0) throw Error("verify_conjugate_pair needs a Hermitian element built from a generator");
  const auto& cm = oc.map();
  const auto& chart = oc.dn().chart;
  const VectorXc w = trace_on_cover(e, oc);
  const VectorX fb = w.real(), pb = w.imag();
  HarmonicSolution u, v;
  u.values = oc.solver().extend(fb);
  v.values = oc.solver().extend(pb);
  const auto gu = gradient_field(oc.mesh(), u, true);
  const auto gv = gradient_field(oc.mesh(), v, false);
  std::vector<Eigen::Vector2d> diff(gu.rotated.size());
  for (std::size_t t = 0; t < diff.size(); ++t) diff[t] = gv.gradient[t] - gu.rotated[t];

  ConjugacyCheck r;
  r.cr_residual = detail::safe_ratio(field_norm(oc.mesh(), diff), field_norm(oc.mesh(), gu.gradient));

  const VectorX lf_up = transfer_function(TransferDirection::lift, e.lambda_f, cm);
  VectorX fdot_up = transfer_function(TransferDirection::lift, e.fdot, cm);
  r.derivative_residual = detail::safe_ratio(oc.dn().norm(tangential_derivative(chart, pb) - lf_up), oc.dn().norm(lf_up));

  const auto& tau = *oc.mesh().involution;
  Real pd = 0;
  for (int x = 0; x < oc.mesh().num_vertices(); ++x) pd = std::max(pd, std::abs(v.values[x] + v.values[tau[x]]));
  r.parity_defect = detail::safe_ratio(pd, v.values.cwiseAbs().maxCoeff());

  VectorX signed_fdot = fdot_up;
  for (int i = 0; i < chart.size; ++i) signed_fdot[i] *= cm.sigma[i];
  r.flux_identity = detail::safe_ratio(oc.dn().norm(oc.dn().lambda * pb + signed_fdot), oc.dn().norm(fdot_up));

  const VectorX modulus = (u.values.array().square() + v.values.array().square()).sqrt().matrix();
  const Real bmax = (fb.array().square() + pb.array().square()).sqrt().maxCoeff();
  r.max_modulus_excess = detail::safe_ratio(std::max(0.0, modulus.maxCoeff() - bmax), bmax);
  return r;
}

}  // namespace dnmap
