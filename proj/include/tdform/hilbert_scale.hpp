#pragma once

// The scale H+ ⊂ H ⊂ H- generated by A = H + (m + 1) I.
//
// In finite dimension the three spaces coincide as sets; only the norms
// ||v||_+^2 = v* A v and ||v||_-^2 = v* A^{-1} v differ.

#include <cmath>
#include <sstream>

#include "tdform/forms.hpp"

namespace tdform {

class HilbertScale {
 public:
  HilbertScale(const Mat& h, Semibound m) : shift_(m.m + 1.0) {
    require_square(h, "Hamiltonian");
    const Mat hs = symmetrized(h);
    const Index n = hs.rows();
    a_ = hs + shift_ * Mat::Identity(n, n);
    eig_ = hermitian_eigen(a_);
    if (n > 0 && eig_.values(0) - shift_ < -m.m - 1e-10) {
      std::ostringstream os;
      os << "invalid semibound: lambda_min(H) = " << eig_.values(0) - shift_ << " < -m = " << -m.m;
      throw std::invalid_argument(os.str());
    }
  }

  Index dim() const noexcept { return a_.rows(); }
  const Mat& op() const noexcept { return a_; }
  const RVec& eigenvalues() const noexcept { return eig_.values; }
  const Mat& eigenvectors() const noexcept { return eig_.vectors; }
  double shift() const noexcept { return shift_; }

  double norm_plus(const Vec& v) const { return std::sqrt(weighted(v, 1.0)); }
  double norm_minus(const Vec& v) const { return std::sqrt(weighted(v, -1.0)); }

  // A^p v through the cached eigendecomposition.
  Vec apply_power(double p, const Vec& v) const {
    require_dim(v.size(), dim(), "vector");
    Vec c = eig_.vectors.adjoint() * v;
    for (Index j = 0; j < c.size(); ++j) c(j) *= std::pow(eig_.values(j), p);
    return eig_.vectors * c;
  }

  Mat power(double p) const {
    return spectral_map(eig_, [p](double lam) { return std::pow(lam, p); });
  }

  // The isometry J: H- -> H+, ||J v||_+ = ||v||_-.
  Vec apply_J(const Vec& v) const { return apply_power(-1.0, v); }

 private:
  double weighted(const Vec& v, double p) const {
    require_dim(v.size(), dim(), "vector");
    const Vec c = eig_.vectors.adjoint() * v;
    double s = 0.0;
    for (Index j = 0; j < c.size(); ++j) s += std::pow(eig_.values(j), p) * std::norm(c(j));
    return s;
  }

  double shift_;
  Mat a_;
  HermitianEigen eig_;
};

inline HilbertScale build_scale(const Mat& h, Semibound m) { return HilbertScale(h, m); }

// The extension of the H inner product to H- x H+.
inline cplx pairing(const Vec& psi, const Vec& phi) {
  require_dim(psi.size(), phi.size(), "pairing");
  return psi.dot(phi);
}

// Smallest c with c^{-1} ||x||_1 <= ||x||_2 <= c ||x||_1, from the pencil
// A2 x = lambda A1 x.
struct EquivalenceConstant {
  double c = 1.0;
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  RVec spectrum;   // ascending pencil eigenvalues
  Vec argmin;      // pencil eigenvector for lambda_min
  Vec argmax;      // pencil eigenvector for lambda_max
};

inline EquivalenceConstant pencil_constant(const Mat& a2, const Mat& a1) {
  require_square(a1, "pencil operator");
  require_dim(a2.rows(), a1.rows(), "pencil");
  const Eigen::LLT<Mat> llt(symmetrized(a1));
  if (llt.info() != Eigen::Success) throw NumericalError("pencil reference operator is not positive definite");
  const Index n = a1.rows();
  const auto lower = llt.matrixL();
  Mat m = lower.solve(symmetrized(a2));
  m = lower.solve(m.adjoint().eval()).adjoint();
  const HermitianEigen e = hermitian_eigen(symmetrized(m));
  if (n == 0) return {};
  EquivalenceConstant out;
  out.spectrum = e.values;
  out.lambda_min = e.values(0);
  out.lambda_max = e.values(n - 1);
  if (!(out.lambda_min > 0.0)) throw NumericalError("pencil has a non-positive eigenvalue");
  out.c = std::max(std::sqrt(out.lambda_max), 1.0 / std::sqrt(out.lambda_min));
  const auto upper = llt.matrixU();
  out.argmin = upper.solve(e.vectors.col(0));
  out.argmax = upper.solve(e.vectors.col(n - 1));
  return out;
}

// Constant relating ||.||_{+,1} and ||.||_{+,2}.
inline EquivalenceConstant equivalence_constant(const HilbertScale& s1, const HilbertScale& s2) {
  require_dim(s2.dim(), s1.dim(), "scales");
  return pencil_constant(s2.op(), s1.op());
}

// Constant relating ||.||_{-,1} and ||.||_{-,2}; pencil (A2^{-1}, A1^{-1}).
inline EquivalenceConstant duality_constant(const HilbertScale& s1, const HilbertScale& s2) {
  require_dim(s2.dim(), s1.dim(), "scales");
  return pencil_constant(s2.power(-1.0), s1.power(-1.0));
}

}  // namespace tdform
