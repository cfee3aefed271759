#pragma once

// Grid audits of the two well-posedness regimes for H(t):
//   S1  C^{-1} A(t0) <= A(t) <= C A(t0)
//   S2  sup_t ||A^{1/2} (d/dt A^{-1}) A^{1/2}|| < infinity
//   K2  t -> <., .>_{+,t} is C^n, probed through moduli of continuity of
//       the n-th derivative in ||.||_{+-}.
// Everything is numerical evidence on a finite grid, never a proof.

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "tdform/hamiltonian.hpp"

namespace tdform {

namespace detail {

inline Mat one_stencil(const MatrixFunction& f, double t, double h, double lo, double hi) {
  const double slack = 1e-12 * std::max(1.0, std::abs(hi - lo));
  if (t - h >= lo - slack && t + h <= hi + slack) return (f(t + h) - f(t - h)) / (2.0 * h);
  if (t + 2.0 * h <= hi + slack) return (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h);
  if (t - 2.0 * h >= lo - slack) return (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h);
  std::ostringstream os;
  os << "finite-difference stencil at t = " << t << " with step " << h << " leaves [" << lo << ", " << hi << "]";
  throw std::domain_error(os.str());
}

// Second-order stencil plus one Richardson level, symmetrized.
inline Mat richardson_derivative(const MatrixFunction& f, double t, double h, double lo, double hi) {
  const Mat coarse = one_stencil(f, t, h, lo, hi);
  const Mat fine = one_stencil(f, t, 0.5 * h, lo, hi);
  return symmetrized((4.0 * fine - coarse) / 3.0);
}

inline double default_fd_step(const TimeDependentHamiltonian& tdh) { return tdh.span() * 1e-4; }

}  // namespace detail

// Central difference (H(t+h) - H(t-h)) / 2h with one Richardson level.
inline Mat differentiate_form(const TimeDependentHamiltonian& tdh, double t, double h_step) {
  if (!(h_step >= 1e-8 * tdh.span())) {
    std::ostringstream os;
    os << "finite-difference step " << h_step << " underflows 1e-8 * T = " << 1e-8 * tdh.span();
    throw std::invalid_argument(os.str());
  }
  const double slack = 1e-12 * std::max(1.0, std::abs(tdh.span()));
  if (t - h_step < tdh.t_begin - slack || t + h_step > tdh.t_end + slack) {
    std::ostringstream os;
    os << "t +- h = [" << t - h_step << ", " << t + h_step << "] leaves the time span";
    throw std::domain_error(os.str());
  }
  const Mat coarse = (tdh.eval(t + h_step) - tdh.eval(t - h_step)) / (2.0 * h_step);
  const double half = 0.5 * h_step;
  const Mat fine = (tdh.eval(t + half) - tdh.eval(t - half)) / (2.0 * half);
  return symmetrized((4.0 * fine - coarse) / 3.0);
}

// n-th time derivative of H (n <= 2): analytic where the family provides it,
// otherwise one-sided near the ends of the span.
inline Mat form_derivative(const TimeDependentHamiltonian& tdh, double t, int order, double h_step = 0.0) {
  if (h_step <= 0.0) h_step = detail::default_fd_step(tdh);
  switch (order) {
    case 0:
      return tdh.eval(t);
    case 1:
      if (tdh.deriv) return (*tdh.deriv)(t);
      return detail::richardson_derivative(tdh.eval, t, h_step, tdh.t_begin, tdh.t_end);
    case 2: {
      const MatrixFunction first = tdh.deriv ? *tdh.deriv : MatrixFunction([&tdh, h_step](double s) {
        return detail::richardson_derivative(tdh.eval, s, h_step, tdh.t_begin, tdh.t_end);
      });
      // Nested differences need a coarser outer step.
      return detail::richardson_derivative(first, t, tdh.deriv ? h_step : 10.0 * h_step, tdh.t_begin, tdh.t_end);
    }
    default:
      throw std::invalid_argument("derivative order must be 0, 1 or 2");
  }
}

struct S1Result {
  double t0 = 0.0;
  double C = 1.0;          // norm-level constant, max_t c(t)
  double C_squared = 1.0;  // operator-level bound max_t max(lambda_max, 1/lambda_min)
  double C_alt = 1.0;      // same with reference A(t0) + I (extra ||.||^2 in the reference norm)
  std::vector<double> lambda_min_pencil;
  std::vector<double> lambda_max_pencil;
};

inline S1Result check_S1(const TimeDependentHamiltonian& tdh, const TimeGrid& grid, double t0) {
  const Index n = tdh.dim;
  const Mat ref = tdh.shifted(t0);
  if (lambda_min(ref) <= 0.0) throw NumericalError("A(t0) is not positive definite");
  const Mat ref_alt = ref + Mat::Identity(n, n);
  S1Result out;
  out.t0 = t0;
  double alt_sq = 1.0;
  for (double t : grid.points()) {
    const Mat a = tdh.shifted(t);
    const double amin = lambda_min(a);
    if (!(amin > 0.0)) {
      std::ostringstream os;
      os << "A(t) is not positive definite at t = " << t << " (lambda_min = " << amin << ")";
      throw NumericalError(os.str());
    }
    const EquivalenceConstant p = pencil_constant(a, ref);
    out.lambda_min_pencil.push_back(p.lambda_min);
    out.lambda_max_pencil.push_back(p.lambda_max);
    out.C_squared = std::max({out.C_squared, p.lambda_max, 1.0 / p.lambda_min});
    const EquivalenceConstant q = pencil_constant(a, ref_alt);
    alt_sq = std::max({alt_sq, q.lambda_max, 1.0 / q.lambda_min});
  }
  out.C = std::sqrt(out.C_squared);
  out.C_alt = std::sqrt(alt_sq);
  return out;
}

struct S2Options {
  double fd_step = 0.0;  // 0: T * 1e-4
  bool allow_finite_differences = true;
};

struct S2Result {
  double bound = 0.0;
  std::vector<double> local;       // ||A^{-1/2} H' A^{-1/2}||
  std::vector<double> local_dual;  // ||A^{1/2} B A^{1/2}||, B = -A^{-1} H' A^{-1}
  double identity_defect = 0.0;    // max |local - local_dual|
  bool analytic_derivative = false;
};

inline S2Result check_S2(const TimeDependentHamiltonian& tdh, const TimeGrid& grid, const S2Options& opt = {}) {
  if (!tdh.deriv && !opt.allow_finite_differences)
    throw std::invalid_argument("S2 audit needs dH/dt: no analytic derivative and finite differences disabled");
  S2Result out;
  out.analytic_derivative = tdh.deriv.has_value();
  for (double t : grid.points()) {
    const Mat hdot = form_derivative(tdh, t, 1, opt.fd_step);
    const HilbertScale scale = tdh.scale_at(t);
    const Mat inv_sqrt = scale.power(-0.5);
    const double direct = hermitian_spectral_norm(symmetrized(inv_sqrt * hdot * inv_sqrt));

    const Eigen::LLT<Mat> llt(scale.op());
    if (llt.info() != Eigen::Success) throw NumericalError("A(t) factorization failed");
    const Mat b = -llt.solve(llt.solve(hdot).adjoint().eval()).adjoint();
    const Mat sqrt_a = scale.power(0.5);
    const double dual = hermitian_spectral_norm(symmetrized(sqrt_a * b * sqrt_a));

    const double defect = std::abs(direct - dual);
    if (defect > 1e-10 * std::max(1.0, direct)) {
      std::ostringstream os;
      os << "S2 identity broken at t = " << t << ": " << direct << " vs " << dual;
      throw NumericalError(os.str());
    }
    out.local.push_back(direct);
    out.local_dual.push_back(dual);
    out.identity_defect = std::max(out.identity_defect, defect);
    out.bound = std::max(out.bound, direct);
  }
  return out;
}

struct ModulusPoint {
  double delta = 0.0;
  double omega = 0.0;
};

struct K2Options {
  int order = 1;
  double t0 = 0.0;
  int max_levels = 6;
  int fit_levels = 4;
  double slope_threshold = 0.9;
  double noise_factor = 10.0;
  double fd_step = 0.0;
};

struct K2Result {
  int order = 1;
  std::vector<ModulusPoint> modulus;  // delta ascending, omega non-decreasing
  std::vector<double> local_omega;    // per grid point, against its neighbours
  double sup_norm = 0.0;              // sup_t ||V^(n)(t)||_{+-}
  double threshold = 0.0;             // noise floor: noise_factor * eps * sup_norm
  double plateau = 0.0;               // omega at the smallest delta
  double slope = 0.0;                 // log-log slope over the first fit levels
  bool pass = false;
};

inline double loglog_slope(const std::vector<ModulusPoint>& pts, int levels) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& p : pts) {
    if (m >= levels) break;
    if (!(p.omega > 0.0)) continue;
    const double x = std::log(p.delta), y = std::log(p.omega);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// omega(delta) = max_{|t - t'| <= delta} ||V^(n)(t) - V^(n)(t')||_{+-} with
// the norm taken against A(t0), on dyadic delta = h_min * 2^k.
inline K2Result check_K2(const TimeDependentHamiltonian& tdh, const TimeGrid& grid, const K2Options& opt = {}) {
  if (grid.size() < 8) throw std::invalid_argument("K2 audit needs a grid with at least 8 points");
  if (opt.order < 0 || opt.order > 2) throw std::invalid_argument("K2 order must be 0, 1 or 2");
  const FormNormGauge gauge(tdh.shifted(opt.t0));
  const auto& t = grid.points();
  const std::size_t npts = t.size();

  std::vector<Mat> w(npts);
  K2Result out;
  out.order = opt.order;
  for (std::size_t i = 0; i < npts; ++i) {
    w[i] = gauge.sandwich(form_derivative(tdh, t[i], opt.order, opt.fd_step));
    out.sup_norm = std::max(out.sup_norm, hermitian_spectral_norm(w[i]));
  }

  const double h = grid.min_spacing();
  const double span = grid.back() - grid.front();
  std::vector<double> deltas;
  for (int k = 0; k < opt.max_levels; ++k) {
    const double d = h * std::ldexp(1.0, k);
    if (d > span * (1.0 + 1e-12)) break;
    deltas.push_back(d);
  }
  std::vector<double> raw(deltas.size(), 0.0);
  out.local_omega.assign(npts, 0.0);
  const double tol = 1.0 + 1e-9;
  for (std::size_t i = 0; i < npts; ++i) {
    for (std::size_t j = i + 1; j < npts; ++j) {
      const double dist = t[j] - t[i];
      if (dist > deltas.back() * tol) break;
      const double d = hermitian_spectral_norm(w[j] - w[i]);
      std::size_t k = 0;
      while (dist > deltas[k] * tol) ++k;
      raw[k] = std::max(raw[k], d);
      if (j == i + 1) {
        out.local_omega[i] = std::max(out.local_omega[i], d);
        out.local_omega[j] = std::max(out.local_omega[j], d);
      }
    }
  }
  double running = 0.0;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    running = std::max(running, raw[k]);
    out.modulus.push_back({deltas[k], running});
  }

  out.threshold = opt.noise_factor * std::numeric_limits<double>::epsilon() * out.sup_norm;
  out.plateau = out.modulus.front().omega;
  out.slope = loglog_slope(out.modulus, opt.fit_levels);
  out.pass = out.plateau <= out.threshold || out.slope >= opt.slope_threshold;
  return out;
}

struct AuditOptions {
  double t0 = 0.0;
  K2Options k2{};
  S2Options s2{};
};

struct Verdicts {
  bool s1 = false;
  bool s2 = false;
  bool k2 = false;
  // K2 pass implies finite S1 and S2 on the same grid.
  bool k_implies_s = false;
  // S passes while K2 fails.
  bool s_without_k = false;
};

struct AssumptionReport {
  std::vector<double> grid;
  std::vector<double> lambda_min;  // of H(t)
  S1Result s1;
  S2Result s2;
  K2Result k2;
  Verdicts verdicts;

  double S1_constant() const { return s1.C; }
  double S2_bound() const { return s2.bound; }
};

// Runs the K2, S1 and S2 audits side by side on one grid.
inline AssumptionReport bridge_check(const TimeDependentHamiltonian& tdh, const TimeGrid& grid,
                                     const AuditOptions& opt = {}) {
  AssumptionReport r;
  r.grid = grid.points();
  for (double t : grid.points()) r.lambda_min.push_back(lambda_min(tdh.eval(t)));
  K2Options k2opt = opt.k2;
  k2opt.t0 = opt.t0;
  r.k2 = check_K2(tdh, grid, k2opt);
  r.s1 = check_S1(tdh, grid, opt.t0);
  r.s2 = check_S2(tdh, grid, opt.s2);
  r.verdicts.s1 = std::isfinite(r.s1.C);
  r.verdicts.s2 = std::isfinite(r.s2.bound);
  r.verdicts.k2 = r.k2.pass;
  r.verdicts.k_implies_s = !r.verdicts.k2 || (r.verdicts.s1 && r.verdicts.s2);
  r.verdicts.s_without_k = r.verdicts.s1 && r.verdicts.s2 && !r.verdicts.k2;
  return r;
}

}  // namespace tdform
