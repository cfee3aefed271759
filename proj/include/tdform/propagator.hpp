#pragma once

// Propagators U(t, s) for i dpsi/dt = H(t) psi.
//
// Two constructions:
//  * truncated Dyson series per substep, optionally for the Yosida
//    approximants H_n(t), which is how existence is obtained for bounded
//    generators; truncation leaves each step non-unitary at O(dt^{k+1}) and
//    the defect is reported, never renormalized;
//  * exponential-midpoint (2nd order Magnus) and the 4th order
//    commutator-free Magnus scheme, exactly unitary up to roundoff, used as
//    reference solutions.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tdform/regularity.hpp"

namespace tdform {

// H_n = H (1 + A/n)^{-1} with A = H + shift I, evaluated on A's eigenbasis as
// lambda_H / (1 + lambda_A / n). Bounded by n in norm and -> H as n -> inf.
inline Mat yosida_operator(const Mat& h, int n, double shift) {
  if (n <= 0) throw std::invalid_argument("Yosida index n must be positive");
  require_square(h, "Hamiltonian");
  const Index dim = h.rows();
  const HermitianEigen e = hermitian_eigen(symmetrized(h) + shift * Mat::Identity(dim, dim));
  const double nn = static_cast<double>(n);
  return symmetrized(spectral_map(e, [&](double la) { return (la - shift) / (1.0 + la / nn); }));
}

// The family t -> H_n(t); same semibound, derivative by finite differences.
inline TimeDependentHamiltonian yosida_family(const TimeDependentHamiltonian& tdh, int n) {
  if (n <= 0) throw std::invalid_argument("Yosida index n must be positive");
  TimeDependentHamiltonian out = tdh;
  const MatrixFunction base = tdh.eval;
  const double shift = tdh.shift();
  out.eval = [base, n, shift](double t) { return yosida_operator(base(t), n, shift); };
  out.deriv.reset();
  out.label = tdh.label + " yosida n=" + std::to_string(n);
  return out;
}

// ||H_n(t) - H(t)||_{+-} against A(t).
inline double yosida_generator_gap(const TimeDependentHamiltonian& tdh, int n, double t) {
  const Mat h = tdh.eval(t);
  return form_operator_norm(yosida_operator(h, n, tdh.shift()) - h, tdh.shifted(t));
}

struct InverseFit {
  double c = 0.0;
  double max_rel_deviation = 0.0;  // max_i |c / n_i - y_i| / y_i
};

// y ~ c / n with c chosen to minimize the largest relative deviation.
inline InverseFit fit_inverse_n(const std::vector<int>& n, const std::vector<double>& y) {
  if (n.empty() || n.size() != y.size()) throw std::invalid_argument("fit needs matching, non-empty n and y");
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (std::size_t j = 0; j < n.size(); ++j) {
    if (!(y[j] > 0.0) || n[j] <= 0) throw std::invalid_argument("fit needs positive n and y");
    const double r = n[j] * y[j];
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  InverseFit f;
  f.c = 2.0 * rmin * rmax / (rmin + rmax);
  for (std::size_t j = 0; j < n.size(); ++j)
    f.max_rel_deviation = std::max(f.max_rel_deviation, std::abs(f.c / n[j] - y[j]) / y[j]);
  return f;
}

enum class MethodKind { dyson, magnus2, magnus4 };

struct MethodSpec {
  MethodKind kind = MethodKind::magnus2;
  int order = 2;  // Dyson truncation order, 1..4
  int substeps = 256;
  std::optional<int> yosida_n;
  int quadrature_cells = 0;  // Dyson midpoint cells per substep; 0 = matched to the order

  static MethodSpec dyson(int order, int substeps, std::optional<int> yosida_n = {}) {
    return {MethodKind::dyson, order, substeps, yosida_n, 0};
  }
  static MethodSpec magnus2(int substeps) { return {MethodKind::magnus2, 2, substeps, {}, 0}; }
  static MethodSpec magnus4(int substeps) { return {MethodKind::magnus4, 4, substeps, {}, 0}; }

  bool unitary() const noexcept { return kind != MethodKind::dyson; }

  std::string describe() const {
    std::string s;
    switch (kind) {
      case MethodKind::dyson: s = "dyson(order=" + std::to_string(order) + ")"; break;
      case MethodKind::magnus2: s = "magnus2"; break;
      case MethodKind::magnus4: s = "magnus4"; break;
    }
    s += " substeps=" + std::to_string(substeps);
    if (yosida_n) s = "yosida(n=" + std::to_string(*yosida_n) + ", " + s + ")";
    return s;
  }
};

struct PropagatorTable {
  double s = 0.0;
  std::vector<double> times;  // times[0] = s, uniform, monotone towards the end time
  std::vector<Mat> U;         // U(times[j], s)
  MethodSpec method;
  std::vector<double> unitarity_defect;  // ||U(t_j, s)* U(t_j, s) - I||_2
  std::vector<double> step_sizes;
  double declared_tolerance = 1e-10;  // +inf for truncated Dyson

  Index dim() const { return U.empty() ? 0 : U.front().rows(); }

  // Index of the grid time equal to t (within 1e-9 of a step), or -1.
  std::ptrdiff_t find(double t) const {
    const double tol = 1e-9 * (times.size() > 1 ? std::abs(times[1] - times[0]) : 1.0);
    for (std::size_t j = 0; j < times.size(); ++j)
      if (std::abs(times[j] - t) <= tol) return static_cast<std::ptrdiff_t>(j);
    return -1;
  }
};

namespace detail {

// Per-cell midpoint quadrature of the Dyson simplex integrals, with exact time
// ordering: the graded product of the truncated exponentials of each cell,
// later cells acting on the left, keeps every term of degree <= order.
inline Mat dyson_step(const TimeDependentHamiltonian& tdh, double a, double b, int order, int cells) {
  const Index n = tdh.dim;
  const double dt = (b - a) / cells;
  std::vector<Mat> graded(static_cast<std::size_t>(order) + 1, Mat::Zero(n, n));
  graded[0] = Mat::Identity(n, n);
  std::vector<Mat> powers(static_cast<std::size_t>(order) + 1);
  for (int c = 0; c < cells; ++c) {
    const Mat gen = (-kI * dt) * tdh.eval(a + (c + 0.5) * dt);
    powers[0] = Mat::Identity(n, n);
    for (int j = 1; j <= order; ++j) powers[static_cast<std::size_t>(j)] = gen * powers[static_cast<std::size_t>(j - 1)] / static_cast<double>(j);
    for (int p = order; p >= 1; --p) {
      Mat acc = graded[static_cast<std::size_t>(p)];
      for (int j = 1; j <= p; ++j) acc += powers[static_cast<std::size_t>(j)] * graded[static_cast<std::size_t>(p - j)];
      graded[static_cast<std::size_t>(p)] = std::move(acc);
    }
  }
  Mat u = graded[0];
  for (int p = 1; p <= order; ++p) u += graded[static_cast<std::size_t>(p)];
  return u;
}

// Midpoint cells make an O(dt * h^2) quadrature error per substep; for
// orders above 2 the cell width h is shrunk to dt^{order/2} so that the
// quadrature error stays below the truncation error.
inline int matched_cells(int order, double dt) {
  if (order <= 2) return 1;
  const double q = std::ceil(std::pow(std::abs(dt), 1.0 - 0.5 * order));
  return static_cast<int>(std::clamp(q, 1.0, 4096.0));
}

inline Mat magnus2_step(const TimeDependentHamiltonian& tdh, double a, double b) {
  return unitary_exponential(tdh.eval(0.5 * (a + b)), b - a);
}

// Commutator-free 4th order Magnus with two exponentials at the Gauss nodes.
inline Mat magnus4_step(const TimeDependentHamiltonian& tdh, double a, double b) {
  const double dt = b - a;
  const double r3 = std::sqrt(3.0);
  const Mat h1 = tdh.eval(a + (0.5 - r3 / 6.0) * dt);
  const Mat h2 = tdh.eval(a + (0.5 + r3 / 6.0) * dt);
  const double w1 = (3.0 - 2.0 * r3) / 12.0;
  const double w2 = (3.0 + 2.0 * r3) / 12.0;
  return unitary_exponential(w1 * h1 + w2 * h2, dt) * unitary_exponential(w2 * h1 + w1 * h2, dt);
}

inline Mat step(const TimeDependentHamiltonian& tdh, const MethodSpec& m, double a, double b) {
  switch (m.kind) {
    case MethodKind::dyson:
      return dyson_step(tdh, a, b, m.order, m.quadrature_cells > 0 ? m.quadrature_cells : matched_cells(m.order, b - a));
    case MethodKind::magnus2: return magnus2_step(tdh, a, b);
    case MethodKind::magnus4: return magnus4_step(tdh, a, b);
  }
  throw std::invalid_argument("unknown propagation method");
}

inline void validate_method(const MethodSpec& m) {
  if (m.substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  if (m.kind == MethodKind::dyson && (m.order < 1 || m.order > 4))
    throw std::invalid_argument("Dyson order must be in 1..4");
  if (m.yosida_n && *m.yosida_n <= 0) throw std::invalid_argument("Yosida index n must be positive");
}

inline TimeDependentHamiltonian effective_family(const TimeDependentHamiltonian& tdh, const MethodSpec& m) {
  return m.yosida_n ? yosida_family(tdh, *m.yosida_n) : tdh;
}

}  // namespace detail

// U(t_j, s) on the uniform grid t_j = s + j (t - s) / substeps.
inline PropagatorTable build_propagator(const TimeDependentHamiltonian& tdh, double s, double t, const MethodSpec& method) {
  detail::validate_method(method);
  const TimeDependentHamiltonian fam = detail::effective_family(tdh, method);
  const int n = method.substeps;
  PropagatorTable table;
  table.s = s;
  table.method = method;
  table.declared_tolerance = method.unitary() ? 1e-10 : std::numeric_limits<double>::infinity();
  table.times.reserve(static_cast<std::size_t>(n) + 1);
  table.U.reserve(static_cast<std::size_t>(n) + 1);
  table.times.push_back(s);
  table.U.push_back(Mat::Identity(tdh.dim, tdh.dim));
  table.unitarity_defect.push_back(0.0);
  const double dt = (t - s) / n;
  for (int j = 0; j < n; ++j) {
    const double a = s + dt * j;
    const double b = j + 1 == n ? t : s + dt * (j + 1);
    table.U.push_back(detail::step(fam, method, a, b) * table.U.back());
    table.times.push_back(b);
    table.step_sizes.push_back(b - a);
    table.unitarity_defect.push_back(unitarity_defect(table.U.back()));
  }
  return table;
}

inline PropagatorTable dyson_propagator(const TimeDependentHamiltonian& tdh, double s, double t, int order, int substeps,
                                        std::optional<int> yosida_n = {}) {
  return build_propagator(tdh, s, t, MethodSpec::dyson(order, substeps, yosida_n));
}

enum class ReferenceScheme { magnus2, magnus4 };

inline PropagatorTable reference_propagator(const TimeDependentHamiltonian& tdh, double s, double t, int substeps,
                                            ReferenceScheme scheme = ReferenceScheme::magnus2) {
  return build_propagator(tdh, s, t,
                          scheme == ReferenceScheme::magnus2 ? MethodSpec::magnus2(substeps) : MethodSpec::magnus4(substeps));
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
};

inline Trajectory apply_table(const PropagatorTable& table, const Vec& psi0) {
  require_dim(psi0.size(), table.dim(), "initial state");
  Trajectory tr;
  tr.times = table.times;
  for (const Mat& u : table.U) tr.states.push_back(u * psi0);
  return tr;
}

// psi_j = U(t_j, s) psi0, stepping the state directly.
inline Trajectory propagate(const TimeDependentHamiltonian& tdh, double s, double t, const Vec& psi0, const MethodSpec& method) {
  detail::validate_method(method);
  require_dim(psi0.size(), tdh.dim, "initial state");
  if (!(psi0.norm() > 0.0)) throw std::invalid_argument("initial state must be non-zero");
  const TimeDependentHamiltonian fam = detail::effective_family(tdh, method);
  const int n = method.substeps;
  const double dt = (t - s) / n;
  Trajectory tr;
  tr.times.push_back(s);
  tr.states.push_back(psi0);
  for (int j = 0; j < n; ++j) {
    const double a = s + dt * j;
    const double b = j + 1 == n ? t : s + dt * (j + 1);
    tr.states.push_back(detail::step(fam, method, a, b) * tr.states.back());
    tr.times.push_back(b);
  }
  return tr;
}

struct ResidualReport {
  double weak_residual = 0.0;      // max over midpoints and test vectors (||phi||_+ = 1)
  double weak_residual_l2 = 0.0;   // root-mean-square over midpoints of the per-midpoint max
  double weak_dual_norm = std::numeric_limits<double>::quiet_NaN();  // ||r||_- rebuilt from pairings
  double strong_residual_H = 0.0;
  double strong_residual_minus = 0.0;
  double norm_drift = 0.0;
  std::vector<double> midpoints;
  std::vector<double> local_weak;
  std::vector<double> local_strong_minus;
};

// At each midpoint t_{j+1/2} compares (psi_{j+1} - psi_j)/dt with
// -i H(t_{j+1/2}) (psi_j + psi_{j+1})/2, weakly against the test vectors and
// strongly in ||.||_- and ||.||. Test vectors are the columns of `tests`;
// norms refer to the scale of H(t_ref).
inline ResidualReport weak_residual(const TimeDependentHamiltonian& tdh, const Trajectory& tr, const Mat& tests,
                                    std::optional<double> t_ref = {}) {
  const std::size_t npts = tr.times.size();
  if (npts < 3 || tr.states.size() != npts) throw std::invalid_argument("residual needs a trajectory with >= 3 points");
  const double dt0 = tr.times[1] - tr.times[0];
  for (std::size_t j = 1; j < npts; ++j)
    if (std::abs((tr.times[j] - tr.times[j - 1]) - dt0) > 1e-9 * std::abs(dt0))
      throw std::invalid_argument("residual needs a uniform grid");
  require_dim(tests.rows(), tdh.dim, "test vectors");

  const HilbertScale scale = tdh.scale_at(t_ref.value_or(tdh.t_begin));
  Mat phi = tests;
  for (Index c = 0; c < phi.cols(); ++c) {
    const double np = scale.norm_plus(phi.col(c));
    if (!(np > 0.0)) throw std::invalid_argument("test vectors must be non-zero");
    phi.col(c) /= np;
  }
  // A basis of test vectors determines r from its pairings, giving ||r||_-
  // through the ||.||_+ Gram matrix of the basis.
  const bool spanning = phi.cols() == tdh.dim && Eigen::FullPivLU<Mat>(phi).rank() == tdh.dim;
  Eigen::LLT<Mat> gram;
  if (spanning) gram.compute(symmetrized(phi.adjoint() * scale.op() * phi));

  ResidualReport rep;
  const double n0 = tr.states.front().norm();
  double sumsq = 0.0;
  double dual = 0.0;
  for (std::size_t j = 0; j + 1 < npts; ++j) {
    const double dt = tr.times[j + 1] - tr.times[j];
    const double tm = 0.5 * (tr.times[j] + tr.times[j + 1]);
    const Vec mid = 0.5 * (tr.states[j] + tr.states[j + 1]);
    const Vec r = (tr.states[j + 1] - tr.states[j]) / dt + kI * (tdh.eval(tm) * mid);
    const Vec w = phi.adjoint() * r;
    const double lw = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
    const double lm = scale.norm_minus(r);
    rep.midpoints.push_back(tm);
    rep.local_weak.push_back(lw);
    rep.local_strong_minus.push_back(lm);
    rep.weak_residual = std::max(rep.weak_residual, lw);
    rep.strong_residual_minus = std::max(rep.strong_residual_minus, lm);
    rep.strong_residual_H = std::max(rep.strong_residual_H, r.norm());
    sumsq += lw * lw;
    if (spanning) dual = std::max(dual, std::sqrt(std::max(0.0, w.dot(gram.solve(w)).real())));
  }
  for (const Vec& v : tr.states) rep.norm_drift = std::max(rep.norm_drift, std::abs(v.norm() - n0));
  rep.weak_residual_l2 = std::sqrt(sumsq / static_cast<double>(npts - 1));
  if (spanning) rep.weak_dual_norm = dual;
  return rep;
}

struct AxiomReport {
  double identity_defect = 0.0;     // max |U(s, s) - I| entrywise, both tables
  double composition_defect = 0.0;  // max_t ||U(t, s) U(s, r) - U(t, r)||_2
  std::size_t compared_times = 0;
  double max_increment = 0.0;          // max_j ||U(t_{j+1}, s) - U(t_j, s)||_2
  double max_increment_sampled = 0.0;  // same applied to the sample vectors
};

// `from_s` holds U(., s), `from_r` holds U(., r) and must contain s and the
// times of `from_s` on its grid.
inline AxiomReport propagator_axioms(const PropagatorTable& from_s, const PropagatorTable& from_r, const Mat& samples = {}) {
  require_dim(from_r.dim(), from_s.dim(), "propagator tables");
  const Index n = from_s.dim();
  AxiomReport rep;
  rep.identity_defect = std::max((from_s.U.front() - Mat::Identity(n, n)).cwiseAbs().maxCoeff(),
                                 (from_r.U.front() - Mat::Identity(n, n)).cwiseAbs().maxCoeff());
  const std::ptrdiff_t is = from_r.find(from_s.s);
  if (is < 0) throw DimensionError("grid mismatch: the start time of the first table is not on the second grid");
  const Mat& u_sr = from_r.U[static_cast<std::size_t>(is)];
  for (std::size_t j = 0; j < from_s.times.size(); ++j) {
    const std::ptrdiff_t k = from_r.find(from_s.times[j]);
    if (k < 0) continue;
    rep.composition_defect =
        std::max(rep.composition_defect, spectral_norm(from_s.U[j] * u_sr - from_r.U[static_cast<std::size_t>(k)]));
    ++rep.compared_times;
  }
  if (rep.compared_times == 0) throw DimensionError("grid mismatch: the tables share no times");
  for (std::size_t j = 0; j + 1 < from_s.U.size(); ++j) {
    const Mat d = from_s.U[j + 1] - from_s.U[j];
    rep.max_increment = std::max(rep.max_increment, spectral_norm(d));
    for (Index c = 0; c < samples.cols(); ++c)
      rep.max_increment_sampled = std::max(rep.max_increment_sampled, (d * samples.col(c)).norm());
  }
  return rep;
}

struct ConvergenceRow {
  int parameter = 0;  // Yosida n or number of steps
  double err_H = 0.0;
  double err_plus = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();  // err(previous) / err(this)
};

inline void fill_ratios(std::vector<ConvergenceRow>& rows) {
  for (std::size_t j = 1; j < rows.size(); ++j) rows[j].ratio = rows[j - 1].err_H / rows[j].err_H;
}

// err(n) = ||(U_n(t, s) - U(t, s)) psi0|| where U_n propagates the Yosida
// approximant; both sides use the same inner scheme.
inline std::vector<ConvergenceRow> yosida_convergence_study(const TimeDependentHamiltonian& tdh, const std::vector<int>& n_list,
                                                            const Vec& psi0, double s, double t,
                                                            const MethodSpec& inner = MethodSpec::magnus4(256)) {
  for (std::size_t j = 1; j < n_list.size(); ++j)
    if (n_list[j] <= n_list[j - 1]) throw std::invalid_argument("Yosida n list must be strictly increasing");
  MethodSpec base = inner;
  base.yosida_n.reset();
  const HilbertScale scale = tdh.scale_at(s);
  const Vec ref = propagate(tdh, s, t, psi0, base).states.back();
  std::vector<ConvergenceRow> rows;
  for (int n : n_list) {
    MethodSpec m = base;
    m.yosida_n = n;
    const Vec diff = propagate(tdh, s, t, psi0, m).states.back() - ref;
    rows.push_back({n, diff.norm(), scale.norm_plus(diff)});
  }
  fill_ratios(rows);
  return rows;
}

// Final-state error of `method` at each step count against a magnus4
// solution with four times the largest step count.
inline std::vector<ConvergenceRow> step_convergence_study(const TimeDependentHamiltonian& tdh, const std::vector<int>& steps_list,
                                                          const Vec& psi0, double s, double t, MethodSpec method) {
  if (steps_list.empty()) throw std::invalid_argument("steps list is empty");
  const int finest = *std::max_element(steps_list.begin(), steps_list.end());
  MethodSpec refm = MethodSpec::magnus4(4 * finest);
  refm.yosida_n = method.yosida_n;
  const Vec ref = propagate(tdh, s, t, psi0, refm).states.back();
  const HilbertScale scale = tdh.scale_at(s);
  std::vector<ConvergenceRow> rows;
  for (int n : steps_list) {
    method.substeps = n;
    const Vec diff = propagate(tdh, s, t, psi0, method).states.back() - ref;
    rows.push_back({n, diff.norm(), scale.norm_plus(diff)});
  }
  fill_ratios(rows);
  return rows;
}

}  // namespace tdform
