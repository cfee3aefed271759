#pragma once

// Concrete families H(t).
//
// The circle model is the Fourier-Galerkin compression of the form
//   h_a(phi, psi) = <phi', psi'> + a conj(phi(0)) psi(0)
// on periodic H^1[0, 2pi] to the modes e_k = e^{ikx}/sqrt(2pi), |k| <= K.
// Since e_k(0) = 1/sqrt(2pi) for every k, the boundary term is (a/2pi) times
// the all-ones matrix. Units: hbar = 1, 2m = 1, circle length 2pi.

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tdform/hamiltonian.hpp"

namespace tdform {

enum class AlphaKind { constant, polynomial, trigonometric, kink, rough_c0, table };

inline std::string_view to_string(AlphaKind k) {
  switch (k) {
    case AlphaKind::constant: return "constant";
    case AlphaKind::polynomial: return "polynomial";
    case AlphaKind::trigonometric: return "trigonometric";
    case AlphaKind::kink: return "kink";
    case AlphaKind::rough_c0: return "rough_c0";
    case AlphaKind::table: return "table";
  }
  return "?";
}

// Interaction strength a(t).
//   constant       {c}
//   polynomial     {c0, c1, ...}                 sum c_r t^r
//   trigonometric  {offset, amplitude, omega, phase}
//   kink           {center, slope, offset}       offset + slope |t - center|
//   rough_c0       {amplitude, scale, center}    amplitude u^2 sin(1/u), u = (t - center)/scale
//   table          {t_0, ..., t_{m-1}, v_0, ..., v_{m-1}}   piecewise linear
// rough_c0 is differentiable with a bounded derivative that has no limit at
// the center; kink has a corner.
class AlphaProfile {
 public:
  static AlphaProfile constant(double c) { return AlphaProfile(AlphaKind::constant, {c}); }
  static AlphaProfile polynomial(std::vector<double> coeffs) {
    if (coeffs.empty()) coeffs.push_back(0.0);
    return AlphaProfile(AlphaKind::polynomial, std::move(coeffs));
  }
  static AlphaProfile trigonometric(double offset, double amplitude, double omega, double phase = 0.0) {
    return AlphaProfile(AlphaKind::trigonometric, {offset, amplitude, omega, phase});
  }
  static AlphaProfile sine() { return trigonometric(0.0, 1.0, 1.0, 0.0); }
  static AlphaProfile kink(double center, double slope = 1.0, double offset = 0.0) {
    return AlphaProfile(AlphaKind::kink, {center, slope, offset});
  }
  static AlphaProfile rough_c0(double amplitude, double scale, double center) {
    if (!(scale > 0.0)) throw std::invalid_argument("rough_c0 scale must be positive");
    return AlphaProfile(AlphaKind::rough_c0, {amplitude, scale, center});
  }
  static AlphaProfile table(const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size() || times.empty())
      throw std::invalid_argument("alpha table needs matching, non-empty times and values");
    for (std::size_t j = 1; j < times.size(); ++j)
      if (!(times[j] > times[j - 1]))
        throw std::invalid_argument("alpha table times must be sorted and free of duplicates");
    std::vector<double> p(times);
    p.insert(p.end(), values.begin(), values.end());
    return AlphaProfile(AlphaKind::table, std::move(p));
  }

  // Generic factory used by configuration parsing; validates the parameter count.
  static AlphaProfile make(AlphaKind kind, const std::vector<double>& params) {
    auto need = [&](std::size_t n) {
      if (params.size() != n) {
        std::ostringstream os;
        os << "alpha kind " << to_string(kind) << " takes " << n << " parameters, got " << params.size();
        throw std::invalid_argument(os.str());
      }
    };
    switch (kind) {
      case AlphaKind::constant: need(1); return constant(params[0]);
      case AlphaKind::polynomial: return polynomial(params);
      case AlphaKind::trigonometric: need(4); return trigonometric(params[0], params[1], params[2], params[3]);
      case AlphaKind::kink: need(3); return kink(params[0], params[1], params[2]);
      case AlphaKind::rough_c0: need(3); return rough_c0(params[0], params[1], params[2]);
      case AlphaKind::table: {
        if (params.size() % 2 != 0 || params.empty())
          throw std::invalid_argument("alpha table takes times followed by an equal number of values");
        const std::size_t m = params.size() / 2;
        return table({params.begin(), params.begin() + m}, {params.begin() + m, params.end()});
      }
    }
    throw std::invalid_argument("unknown alpha kind");
  }

  AlphaKind kind() const noexcept { return kind_; }
  const std::vector<double>& params() const noexcept { return p_; }
  bool has_derivative() const noexcept { return true; }

  double operator()(double t) const {
    switch (kind_) {
      case AlphaKind::constant: return p_[0];
      case AlphaKind::polynomial: {
        double s = 0.0;
        for (auto it = p_.rbegin(); it != p_.rend(); ++it) s = s * t + *it;
        return s;
      }
      case AlphaKind::trigonometric: return p_[0] + p_[1] * std::sin(p_[2] * t + p_[3]);
      case AlphaKind::kink: return p_[2] + p_[1] * std::abs(t - p_[0]);
      case AlphaKind::rough_c0: {
        const double u = (t - p_[2]) / p_[1];
        return u == 0.0 ? 0.0 : p_[0] * u * u * std::sin(1.0 / u);
      }
      case AlphaKind::table: {
        const std::size_t m = p_.size() / 2;
        const std::size_t j = segment(t);
        if (m == 1) return p_[1];
        const double t0 = p_[j], t1 = p_[j + 1], v0 = p_[m + j], v1 = p_[m + j + 1];
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
      }
    }
    return 0.0;
  }

  // a'(t); at a kink corner the mean of the one-sided slopes, at table nodes
  // the slope of the segment to the right.
  double derivative(double t) const {
    switch (kind_) {
      case AlphaKind::constant: return 0.0;
      case AlphaKind::polynomial: {
        double s = 0.0;
        for (std::size_t r = p_.size() - 1; r >= 1; --r) s = s * t + static_cast<double>(r) * p_[r];
        return s;
      }
      case AlphaKind::trigonometric: return p_[1] * p_[2] * std::cos(p_[2] * t + p_[3]);
      case AlphaKind::kink: {
        const double d = t - p_[0];
        return d > 0.0 ? p_[1] : (d < 0.0 ? -p_[1] : 0.0);
      }
      case AlphaKind::rough_c0: {
        const double u = (t - p_[2]) / p_[1];
        if (u == 0.0) return 0.0;
        return p_[0] / p_[1] * (2.0 * u * std::sin(1.0 / u) - std::cos(1.0 / u));
      }
      case AlphaKind::table: {
        const std::size_t m = p_.size() / 2;
        if (m == 1) return 0.0;
        const std::size_t j = segment(t);
        return (p_[m + j + 1] - p_[m + j]) / (p_[j + 1] - p_[j]);
      }
    }
    return 0.0;
  }

  double min_on(double a, double b) const { return extremum(a, b, [this](double t) { return (*this)(t); }); }
  double max_on(double a, double b) const { return -extremum(a, b, [this](double t) { return -(*this)(t); }); }
  double sup_abs(double a, double b) const { return std::max(std::abs(min_on(a, b)), std::abs(max_on(a, b))); }
  double sup_abs_derivative(double a, double b) const {
    const auto d = [this](double t) { return derivative(t); };
    return std::max(std::abs(extremum(a, b, d)), std::abs(extremum(a, b, [&d](double t) { return -d(t); })));
  }

 private:
  AlphaProfile(AlphaKind k, std::vector<double> p) : kind_(k), p_(std::move(p)) {}

  std::size_t segment(double t) const {
    const std::size_t m = p_.size() / 2;
    if (m < 2) return 0;
    auto it = std::upper_bound(p_.begin(), p_.begin() + static_cast<std::ptrdiff_t>(m), t);
    std::size_t j = static_cast<std::size_t>(it - p_.begin());
    j = j == 0 ? 0 : j - 1;
    return std::min(j, m - 2);
  }

  // Dense sampling, exact candidate points, then Brent refinement of the best
  // sample's bracket.
  template <class F>
  double extremum(double a, double b, F f) const {
    std::vector<double> candidates = {a, b};
    if (kind_ == AlphaKind::kink || kind_ == AlphaKind::rough_c0) candidates.push_back(p_[kind_ == AlphaKind::kink ? 0 : 2]);
    if (kind_ == AlphaKind::table)
      for (std::size_t j = 0; j < p_.size() / 2; ++j) candidates.push_back(p_[j]);
    double best = std::numeric_limits<double>::infinity();
    for (double t : candidates)
      if (t >= a && t <= b) best = std::min(best, f(t));
    constexpr int kSamples = 4096;
    const double h = (b - a) / kSamples;
    int arg = 0;
    double sampled = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= kSamples; ++j) {
      const double v = f(a + h * j);
      if (v < sampled) {
        sampled = v;
        arg = j;
      }
    }
    best = std::min(best, sampled);
    if (h > 0.0) {
      const double lo = a + h * std::max(0, arg - 1);
      const double hi = a + h * std::min(kSamples, arg + 1);
      const auto r = boost::math::tools::brent_find_minima(f, lo, hi, 52);
      best = std::min(best, r.second);
    }
    return best;
  }

  AlphaKind kind_;
  std::vector<double> p_;
};

inline AlphaProfile alpha_profiles(AlphaKind kind, const std::vector<double>& params) {
  return AlphaProfile::make(kind, params);
}

class CircleDeltaModel {
 public:
  CircleDeltaModel(int K, AlphaProfile alpha, double T) : K_(K), alpha_(std::move(alpha)), T_(T) {
    if (K < 1) throw std::invalid_argument("circle model needs K >= 1");
    if (!(T > 0.0)) throw std::invalid_argument("circle model needs T > 0");
  }

  int K() const noexcept { return K_; }
  Index dim() const noexcept { return 2 * K_ + 1; }
  double T() const noexcept { return T_; }
  const AlphaProfile& alpha() const noexcept { return alpha_; }

  // Coefficient position of mode k.
  Index position(int k) const { return static_cast<Index>(k + K_); }
  int mode(Index position) const { return static_cast<int>(position) - K_; }

  Mat kinetic() const {
    Mat d = Mat::Zero(dim(), dim());
    for (int k = -K_; k <= K_; ++k) d(position(k), position(k)) = static_cast<double>(k) * k;
    return d;
  }

  // diag(k^2) + (a / 2pi) * ones
  Mat matrix_at_strength(double a) const {
    Mat h = Mat::Constant(dim(), dim(), cplx(a / (2.0 * std::numbers::pi)));
    for (int k = -K_; k <= K_; ++k) h(position(k), position(k)) += static_cast<double>(k) * k;
    return h;
  }

  Mat eval(double t) const { return matrix_at_strength(alpha_(t)); }
  Mat deriv(double t) const { return Mat::Constant(dim(), dim(), cplx(alpha_.derivative(t) / (2.0 * std::numbers::pi))); }

  // lambda_min is non-decreasing in a for this rank-one positive coupling,
  // so the smallest a on [0, T] fixes the uniform semibound.
  Semibound uniform_semibound() const {
    const double amin = alpha_.min_on(0.0, T_);
    return {std::max(0.0, -lambda_min(matrix_at_strength(amin)))};
  }

  TimeDependentHamiltonian hamiltonian() const {
    TimeDependentHamiltonian tdh;
    tdh.dim = dim();
    const CircleDeltaModel self = *this;
    tdh.eval = [self](double t) { return self.eval(t); };
    if (alpha_.has_derivative()) tdh.deriv = [self](double t) { return self.deriv(t); };
    tdh.t_begin = 0.0;
    tdh.t_end = T_;
    tdh.uniform_semibound = uniform_semibound();
    tdh.label = "circle_delta K=" + std::to_string(K_) + " alpha=" + std::string(to_string(alpha_.kind()));
    return tdh;
  }

  // Orthogonal change to the basis {e_0, (e_k + e_-k)/sqrt2, (e_k - e_-k)/sqrt2 : k = 1..K};
  // columns 0..K span the symmetric sector, K+1..2K the antisymmetric one.
  Mat symmetry_basis() const {
    Mat s = Mat::Zero(dim(), dim());
    s(position(0), 0) = 1.0;
    const double r = std::sqrt(0.5);
    for (int k = 1; k <= K_; ++k) {
      s(position(k), k) = r;
      s(position(-k), k) = r;
      s(position(k), K_ + k) = r;
      s(position(-k), K_ + k) = -r;
    }
    return s;
  }

 private:
  int K_;
  AlphaProfile alpha_;
  double T_;
};

inline TimeDependentHamiltonian circle_delta_model(int K, const AlphaProfile& alpha, double T) {
  return CircleDeltaModel(K, alpha, T).hamiltonian();
}

// Sorted eigenvalues of H(t).
inline RVec spectrum(const TimeDependentHamiltonian& tdh, double t) { return hermitian_eigenvalues(tdh.eval(t)); }

// 1 + (a/2pi) sum_{|k|<=K} 1/(k^2 - lambda)
inline double secular_function(int K, double a, double lambda) {
  double s = 0.0;
  for (int k = -K; k <= K; ++k) s += 1.0 / (static_cast<double>(k) * k - lambda);
  return 1.0 + a / (2.0 * std::numbers::pi) * s;
}

// Secular function divided by 1 + |a/2pi| sum 1/|k^2 - lambda|, so that
// cancellation near a pole is judged relative to the size of the terms.
inline double secular_residual(int K, double a, double lambda) {
  double s = 0.0, sa = 0.0;
  for (int k = -K; k <= K; ++k) {
    const double d = static_cast<double>(k) * k - lambda;
    s += 1.0 / d;
    sa += 1.0 / std::abs(d);
  }
  const double c = a / (2.0 * std::numbers::pi);
  return std::abs(1.0 + c * s) / (1.0 + std::abs(c) * sa);
}

// lambda coincides with some k^2 to rounding: the eigenvalue is degenerate
// with the uncoupled spectrum and the secular equation says nothing about it.
inline bool on_pole(int K, double lambda) {
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lambda));
  for (int k = 0; k <= K; ++k)
    if (std::abs(static_cast<double>(k) * k - lambda) <= tol) return true;
  return false;
}

struct SectorSpectrum {
  RVec symmetric;      // K + 1 eigenvalues, ascending
  RVec antisymmetric;  // K eigenvalues, ascending; k^2 for every a
  double max_secular_residual = 0.0;  // over symmetric eigenvalues
  double coupling_leak = 0.0;         // max |entry| coupling the sectors
};

inline SectorSpectrum sector_spectrum(const CircleDeltaModel& model, double t) {
  const Index K = model.K();
  const Mat s = model.symmetry_basis();
  const Mat b = s.adjoint() * model.eval(t) * s;
  SectorSpectrum out;
  out.coupling_leak = b.block(0, K + 1, K + 1, K).cwiseAbs().maxCoeff();
  out.symmetric = hermitian_eigenvalues(symmetrized(b.topLeftCorner(K + 1, K + 1)));
  out.antisymmetric = hermitian_eigenvalues(symmetrized(b.bottomRightCorner(K, K)));
  const double a = model.alpha()(t);
  if (a != 0.0)
    for (Index j = 0; j < out.symmetric.size(); ++j)
      if (!on_pole(model.K(), out.symmetric(j)))
        out.max_secular_residual =
          std::max(out.max_secular_residual, secular_residual(model.K(), a, out.symmetric(j)));
  return out;
}

// Families with closed-form propagators, used as oracles.
struct SyntheticFamily {
  std::string kind;
  TimeDependentHamiltonian hamiltonian;
  std::function<Mat(double t, double s)> exact;
};

inline SyntheticFamily constant_family(const Mat& h0, double T) {
  const Mat h = symmetrized(h0);
  SyntheticFamily f;
  f.kind = "constant";
  f.hamiltonian.dim = h.rows();
  f.hamiltonian.eval = [h](double) { return h; };
  f.hamiltonian.deriv = [n = h.rows()](double) { return Mat::Zero(n, n).eval(); };
  f.hamiltonian.t_end = T;
  f.hamiltonian.uniform_semibound = {std::max(0.0, -lambda_min(h))};
  f.hamiltonian.label = "constant";
  f.exact = [h](double t, double s) { return unitary_exponential(h, t - s); };
  return f;
}

// H(t) = diag(d_j(t)), d_j(t) = sum_r coeffs[j][r] t^r.
inline SyntheticFamily commuting_diagonal_family(const std::vector<std::vector<double>>& coeffs, double T) {
  const Index n = static_cast<Index>(coeffs.size());
  if (n < 1) throw std::invalid_argument("commuting_diagonal needs at least one entry");
  std::vector<AlphaProfile> d;
  for (const auto& c : coeffs) d.push_back(AlphaProfile::polynomial(c));
  double dmin = 0.0;
  for (const auto& p : d) dmin = std::min(dmin, p.min_on(0.0, T));
  SyntheticFamily f;
  f.kind = "commuting_diagonal";
  f.hamiltonian.dim = n;
  f.hamiltonian.eval = [d](double t) {
    Mat h = Mat::Zero(static_cast<Index>(d.size()), static_cast<Index>(d.size()));
    for (std::size_t j = 0; j < d.size(); ++j) h(static_cast<Index>(j), static_cast<Index>(j)) = d[j](t);
    return h;
  };
  f.hamiltonian.deriv = [d](double t) {
    Mat h = Mat::Zero(static_cast<Index>(d.size()), static_cast<Index>(d.size()));
    for (std::size_t j = 0; j < d.size(); ++j) h(static_cast<Index>(j), static_cast<Index>(j)) = d[j].derivative(t);
    return h;
  };
  f.hamiltonian.t_end = T;
  f.hamiltonian.uniform_semibound = {-dmin};
  f.hamiltonian.label = "commuting_diagonal";
  f.exact = [coeffs](double t, double s) {
    const Index m = static_cast<Index>(coeffs.size());
    Mat u = Mat::Zero(m, m);
    for (Index j = 0; j < m; ++j) {
      double phase = 0.0;
      const auto& c = coeffs[static_cast<std::size_t>(j)];
      for (std::size_t r = 0; r < c.size(); ++r) {
        const double p = static_cast<double>(r + 1);
        phase += c[r] * (std::pow(t, p) - std::pow(s, p)) / p;
      }
      u(j, j) = std::exp(-kI * phase);
    }
    return u;
  };
  return f;
}

// H(t) = R(t) H0 R(t)*, R(t) = exp(Omega t), Omega skew-Hermitian. Then
// U(t, s) = R(t) exp(-(i H0 + Omega)(t - s)) R(s)*.
inline SyntheticFamily rotating_frame_family(const Mat& h0, const Mat& omega, double T) {
  require_dim(omega.rows(), h0.rows(), "rotation generator");
  if (max_asymmetry(kI * omega) > 1e-12 * std::max(1.0, omega.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("rotation generator must be skew-Hermitian");
  const Mat h = symmetrized(h0);
  const Mat gen = symmetrized(kI * omega);           // Hermitian, R(t) = exp(-i t gen)
  const Mat frame = symmetrized(h - kI * omega);     // H0 - i Omega
  SyntheticFamily f;
  f.kind = "rotating_frame";
  f.hamiltonian.dim = h.rows();
  f.hamiltonian.eval = [h, gen](double t) {
    const Mat r = unitary_exponential(gen, t);
    return symmetrized(r * h * r.adjoint());
  };
  f.hamiltonian.deriv = [h, gen, omega](double t) {
    const Mat r = unitary_exponential(gen, t);
    const Mat ht = r * h * r.adjoint();
    return symmetrized(omega * ht - ht * omega);
  };
  f.hamiltonian.t_end = T;
  f.hamiltonian.uniform_semibound = {std::max(0.0, -lambda_min(h))};
  f.hamiltonian.label = "rotating_frame";
  f.exact = [gen, frame](double t, double s) {
    return (unitary_exponential(gen, t) * unitary_exponential(frame, t - s) * unitary_exponential(gen, s).adjoint())
        .eval();
  };
  return f;
}

// Reproducible uniform deviates in [-1, 1) from a 64-bit seed (splitmix64).
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : state_(seed) {}
  double operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return 2.0 * static_cast<double>(z >> 11) * 0x1.0p-53 - 1.0;
  }

 private:
  std::uint64_t state_;
};

// Seeded defaults: constant draws a Hermitian H0; commuting_diagonal uses
// d_j(t) = (j + 1) t; rotating_frame uses H0 = diag(j) + seeded coupling and
// Omega = -i diag(j / 2).
inline SyntheticFamily synthetic_family(std::string_view kind, Index n, double T, std::uint64_t seed = 1) {
  if (n < 2) throw std::invalid_argument("synthetic families need n >= 2");
  SeededUniform u(seed);
  auto random_hermitian = [&](double diag_scale) {
    Mat h(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) h(j, k) = cplx(u(), u());
    Mat out = symmetrized(h);
    for (Index j = 0; j < n; ++j) out(j, j) += diag_scale * static_cast<double>(j);
    return out;
  };
  if (kind == "constant") return constant_family(random_hermitian(0.0), T);
  if (kind == "commuting_diagonal") {
    std::vector<std::vector<double>> c;
    for (Index j = 0; j < n; ++j) c.push_back({0.0, static_cast<double>(j + 1)});
    return commuting_diagonal_family(c, T);
  }
  if (kind == "rotating_frame") {
    Mat omega = Mat::Zero(n, n);
    for (Index j = 0; j < n; ++j) omega(j, j) = cplx(0.0, -0.5 * static_cast<double>(j));
    return rotating_frame_family(0.5 * random_hermitian(2.0), omega, T);
  }
  throw std::invalid_argument("unknown synthetic family kind '" + std::string(kind) + "'");
}

}  // namespace tdform
