#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "tdform/errors.hpp"

namespace tdform {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr cplx kI{0.0, 1.0};

// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
struct HermitianEigen {
  RVec values;
  Mat vectors;
};

inline bool is_real(const Mat& m) { return m.imag().cwiseAbs().maxCoeff() == 0.0; }

inline HermitianEigen hermitian_eigen(const Mat& m) {
  if (m.size() > 0 && is_real(m)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.real());
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed to converge");
    return {es.eigenvalues(), es.eigenvectors().cast<cplx>()};
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline RVec hermitian_eigenvalues(const Mat& m) {
  if (m.size() > 0 && is_real(m)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.real(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed to converge");
    return es.eigenvalues();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed to converge");
  return es.eigenvalues();
}

inline double lambda_min(const Mat& m) { return hermitian_eigenvalues(m).minCoeff(); }

// Q f(Λ) Q* for a scalar function f applied to the eigenvalues.
template <class F>
Mat spectral_map(const HermitianEigen& e, F&& f) {
  Vec d(e.values.size());
  for (Index j = 0; j < d.size(); ++j) d(j) = cplx(f(e.values(j)));
  return e.vectors * d.asDiagonal() * e.vectors.adjoint();
}

// Spectral norm of a Hermitian matrix: largest |eigenvalue|.
inline double hermitian_spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  const RVec ev = hermitian_eigenvalues(m);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

inline double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

inline double max_asymmetry(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline Mat symmetrized(const Mat& m) { return (m + m.adjoint()) * 0.5; }

// exp(-i dt H) for Hermitian H.
inline Mat unitary_exponential(const Mat& h, double dt) {
  const HermitianEigen e = hermitian_eigen(symmetrized(h));
  return spectral_map(e, [dt](double lam) { return std::exp(-kI * (lam * dt)); });
}

// ||U* U - I||_2
inline double unitarity_defect(const Mat& u) {
  const Mat g = u.adjoint() * u - Mat::Identity(u.cols(), u.cols());
  return hermitian_spectral_norm(symmetrized(g));
}

inline void require_square(const Mat& m, const char* what) {
  if (m.rows() != m.cols())
    throw DimensionError(std::string(what) + " must be square, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

inline void require_dim(Index got, Index want, const char* what) {
  if (got != want)
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(got) + " does not match " +
                         std::to_string(want));
}

}  // namespace tdform
