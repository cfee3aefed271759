#pragma once

// Hermitian sesquilinear forms on a Galerkin coefficient space.
//
// The basis is orthonormal in the ambient Hilbert space, so the ambient inner
// product is the plain coefficient inner product and a form h is carried by
// its Gram matrix G: h(psi, phi) = psi* G phi.

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "tdform/linalg.hpp"

namespace tdform {

inline constexpr double kHermitianTolerance = 1e-13;

class HermitianForm {
 public:
  // Accepts G when max|G - G*| <= 1e-13 * max|G_jk| and stores (G + G*)/2.
  explicit HermitianForm(const Mat& g, std::string label = {}) : label_(std::move(label)) {
    require_square(g, "form matrix");
    const double asym = max_asymmetry(g);
    const double scale = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    if (!(asym <= kHermitianTolerance * scale)) {
      std::ostringstream os;
      os << "form matrix is not Hermitian: max asymmetry " << asym << " exceeds tolerance "
         << kHermitianTolerance * scale;
      throw NotHermitianError(os.str(), asym);
    }
    g_ = symmetrized(g);
  }

  const Mat& matrix() const noexcept { return g_; }
  Index dim() const noexcept { return g_.rows(); }
  const std::string& label() const noexcept { return label_; }

  // h(psi, phi), anti-linear in psi.
  cplx operator()(const Vec& psi, const Vec& phi) const {
    require_dim(psi.size(), dim(), "form argument");
    require_dim(phi.size(), dim(), "form argument");
    return psi.dot(g_ * phi);
  }

  double quadratic(const Vec& v) const { return (*this)(v, v).real(); }

 private:
  Mat g_;
  std::string label_;
};

// h(v, v) >= -m ||v||^2
struct Semibound {
  double m = 0.0;
  friend bool operator==(const Semibound&, const Semibound&) = default;
};

struct RepresentedOperator {
  Mat op;
  HermitianForm source;
};

// The operator T with <psi, T phi> = h(psi, phi). In an orthonormal basis
// T coincides with G; the core property of the form has no content here.
inline RepresentedOperator represent_form(const HermitianForm& form) { return {form.matrix(), form}; }

// max_{j,k} |<e_j, T e_k> - h(e_j, e_k)|
inline double representation_defect(const RepresentedOperator& rep) {
  const Index n = rep.source.dim();
  require_dim(rep.op.rows(), n, "represented operator");
  double worst = 0.0;
  Vec ej = Vec::Zero(n);
  Vec ek = Vec::Zero(n);
  for (Index k = 0; k < n; ++k) {
    ek.setZero();
    ek(k) = 1.0;
    const Vec tek = rep.op * ek;
    for (Index j = 0; j < n; ++j) {
      ej.setZero();
      ej(j) = 1.0;
      worst = std::max(worst, std::abs(ej.dot(tek) - rep.source(ej, ek)));
    }
  }
  return worst;
}

inline Semibound semibound_of(const HermitianForm& form) {
  if (form.dim() == 0) return {0.0};
  return {std::max(0.0, -lambda_min(form.matrix()))};
}

// sqrt((1 + m) ||v||^2 + h(v, v))
inline double graph_norm(const HermitianForm& form, Semibound m, const Vec& v) {
  const double radicand = (1.0 + m.m) * v.squaredNorm() + form.quadratic(v);
  if (radicand < -1e-12) {
    std::ostringstream os;
    os << "graph norm radicand " << radicand << " is negative; m = " << m.m << " is not a semibound";
    throw std::invalid_argument(os.str());
  }
  return std::sqrt(std::max(0.0, radicand));
}

// Precomputed A0^{-1/2} for repeated evaluation of ||V||_{+-} against one
// reference operator A0.
class FormNormGauge {
 public:
  explicit FormNormGauge(const Mat& a0) {
    require_square(a0, "reference operator");
    const HermitianEigen e = hermitian_eigen(symmetrized(a0));
    if (e.values.size() > 0 && !(e.values(0) > 0.0)) {
      std::ostringstream os;
      os << "reference operator is not positive definite: lambda_min = " << e.values(0);
      throw std::invalid_argument(os.str());
    }
    inv_sqrt_ = spectral_map(e, [](double lam) { return 1.0 / std::sqrt(lam); });
  }

  Index dim() const noexcept { return inv_sqrt_.rows(); }
  const Mat& inverse_sqrt() const noexcept { return inv_sqrt_; }

  Mat sandwich(const Mat& v) const {
    require_dim(v.rows(), dim(), "form operator");
    return symmetrized(inv_sqrt_ * v * inv_sqrt_);
  }

  double operator()(const Mat& v) const { return hermitian_spectral_norm(sandwich(v)); }

 private:
  Mat inv_sqrt_;
};

struct FormNormResult {
  double norm = 0.0;
  // Psi = Phi attaining |v(Psi, Phi)| = norm with ||Psi||_+ = 1.
  Vec extremal;
};

// ||V||_{+-} = sup |v(psi, phi)| / (||psi||_+ ||phi||_+) with ||phi||_+^2 = phi* A0 phi,
// realized as the spectral norm of A0^{-1/2} V A0^{-1/2}.
inline FormNormResult form_operator_norm_detail(const Mat& v, const Mat& a0) {
  const FormNormGauge gauge(a0);
  const HermitianEigen e = hermitian_eigen(gauge.sandwich(v));
  const Index last = e.values.size() - 1;
  if (last < 0) return {0.0, Vec()};
  const Index pick = std::abs(e.values(0)) >= std::abs(e.values(last)) ? 0 : last;
  return {std::abs(e.values(pick)), gauge.inverse_sqrt() * e.vectors.col(pick)};
}

inline double form_operator_norm(const Mat& v, const Mat& a0) { return FormNormGauge(a0)(v); }

}  // namespace tdform
