#include <catch2/catch_amalgamated.hpp>

#include "tdform/models.hpp"
#include "test_support.hpp"

using namespace tdform;
using Catch::Approx;

namespace {

// Roots of the symmetric-sector secular equation 1 + c sum_k 1/(k^2 - x) = 0,
// bracketed between consecutive distinct poles, by bisection.
std::vector<double> secular_roots(int K, double a) {
  const double c = a / (2.0 * std::numbers::pi);
  auto f = [&](double x) {
    double s = 0.0;
    for (int k = -K; k <= K; ++k) s += 1.0 / (static_cast<double>(k) * k - x);
    return 1.0 + c * s;
  };
  std::vector<double> poles;
  for (int k = 0; k <= K; ++k) poles.push_back(static_cast<double>(k) * k);
  std::vector<double> roots;
  const double big = std::abs(c) * (2 * K + 1) + 1.0;
  const double eps = 1e-13;
  if (c < 0) roots.push_back(testing::bisect(f, -big, -eps));
  for (std::size_t j = 0; j + 1 < poles.size(); ++j) {
    const double lo = poles[j] + eps * (1 + poles[j]), hi = poles[j + 1] - eps * (1 + poles[j + 1]);
    roots.push_back(testing::bisect(f, lo, hi));
  }
  if (c > 0) roots.push_back(testing::bisect(f, poles.back() + eps * (1 + poles.back()), poles.back() + big));
  return roots;
}

}  // namespace

TEST_CASE("alpha profiles: values and derivatives", "[models]") {
  const double pi = std::numbers::pi;
  const std::vector<AlphaProfile> profiles = {
      AlphaProfile::constant(0.7),
      AlphaProfile::polynomial({1.0, -2.0, 0.5}),
      AlphaProfile::trigonometric(0.3, 2.0, 1.5, 0.2),
      AlphaProfile::kink(1.0, 2.0, -0.5),
      AlphaProfile::rough_c0(1.0, 0.1, pi),
      AlphaProfile::table({0.0, 1.0, 3.0}, {0.0, 2.0, 1.0}),
  };
  for (const auto& a : profiles) {
    for (double t : {0.33, 0.77, 1.9, 2.6, 3.3}) {
      const double h = 1e-6;
      const double fd = (a(t + h) - a(t - h)) / (2 * h);
      CHECK(a.derivative(t) == Approx(fd).epsilon(1e-5).margin(1e-6));
    }
  }
  CHECK(AlphaProfile::polynomial({1.0, -2.0, 0.5})(2.0) == Approx(1.0 - 4.0 + 2.0));
  CHECK(AlphaProfile::kink(1.0)(0.0) == Approx(1.0));
  CHECK(AlphaProfile::kink(1.0).derivative(1.0) == 0.0);
  const auto rough = AlphaProfile::rough_c0(1.0, 0.1, pi);
  CHECK(rough(pi) == 0.0);
  CHECK(std::abs(rough(pi + 1e-9)) < 1e-15);
  const auto tab = AlphaProfile::table({0.0, 1.0, 3.0}, {0.0, 2.0, 1.0});
  CHECK(tab(0.5) == Approx(1.0));
  CHECK(tab(2.0) == Approx(1.5));
  CHECK(tab.derivative(2.0) == Approx(-0.5));
}

TEST_CASE("alpha profiles: extrema and parameter validation", "[models]") {
  const auto s = AlphaProfile::sine();
  CHECK(s.min_on(0.0, 2.0 * std::numbers::pi) == Approx(-1.0).epsilon(1e-12));
  CHECK(s.max_on(0.0, 2.0 * std::numbers::pi) == Approx(1.0).epsilon(1e-12));
  CHECK(s.sup_abs_derivative(0.0, 2.0 * std::numbers::pi) == Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(AlphaProfile::make(AlphaKind::trigonometric, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(AlphaProfile::make(AlphaKind::table, {0.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(AlphaProfile::table({0.0, 0.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK(AlphaProfile::make(AlphaKind::constant, {2.0})(5.0) == 2.0);
}

TEST_CASE("circle model structure", "[models]") {
  const CircleDeltaModel model(4, AlphaProfile::sine(), 1.0);
  CHECK(model.dim() == 9);
  const Mat h = model.eval(0.5);
  CHECK(max_asymmetry(h) == 0.0);
  const double c = std::sin(0.5) / (2.0 * std::numbers::pi);
  for (int j = -4; j <= 4; ++j)
    for (int k = -4; k <= 4; ++k)
      CHECK(h(model.position(j), model.position(k)).real() == Approx((j == k ? j * j : 0) + c).epsilon(1e-14));
  const Mat s = model.symmetry_basis();
  CHECK((s.adjoint() * s - Mat::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(model.mode(model.position(-3)) == -3);
}

TEST_CASE("circle model spectrum against the secular equation", "[models][spectrum]") {
  for (double a : {-10.0, -1.0, 0.5, 3.0}) {
    const CircleDeltaModel model(8, AlphaProfile::constant(a), 1.0);
    const SectorSpectrum sp = sector_spectrum(model, 0.0);
    const auto roots = secular_roots(8, a);
    REQUIRE(roots.size() == static_cast<std::size_t>(sp.symmetric.size()));
    for (std::size_t j = 0; j < roots.size(); ++j)
      CHECK(sp.symmetric(static_cast<Index>(j)) == Approx(roots[j]).epsilon(1e-10).margin(1e-10));
    CHECK(sp.max_secular_residual < 1e-8);
    for (Index k = 0; k < sp.antisymmetric.size(); ++k)
      CHECK(std::abs(sp.antisymmetric(k) - static_cast<double>((k + 1) * (k + 1))) <= 1e-12);
    CHECK(sp.coupling_leak < 1e-14);
    // the full spectrum is the union of the sectors
    RVec all(sp.symmetric.size() + sp.antisymmetric.size());
    all << sp.symmetric, sp.antisymmetric;
    std::sort(all.data(), all.data() + all.size());
    CHECK((all - spectrum(model.hamiltonian(), 0.0)).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("first-order shift of the ground state", "[models][spectrum]") {
  const CircleDeltaModel model(16, AlphaProfile::constant(0.0), 1.0);
  const double d = 1e-4;
  const double slope =
      (lambda_min(model.matrix_at_strength(d)) - lambda_min(model.matrix_at_strength(-d))) / (2 * d);
  CHECK(slope == Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-3));
}

TEST_CASE("uniform semibound covers every sampled time", "[models][property]") {
  const CircleDeltaModel model(8, AlphaProfile::trigonometric(-2.0, 5.0, 2.0), 3.0);
  const Semibound m = model.uniform_semibound();
  for (int k = 0; k <= 300; ++k) {
    const double t = 3.0 * k / 300.0;
    CHECK(lambda_min(model.eval(t)) >= -m.m - 1e-12);
  }
}

TEST_CASE("synthetic families: closed forms are propagators", "[models][property]") {
  for (const char* kind : {"constant", "commuting_diagonal", "rotating_frame"}) {
    const SyntheticFamily f = synthetic_family(kind, 4, 2.0, 11);
    const Mat id = Mat::Identity(4, 4);
    CHECK((f.exact(0.7, 0.7) - id).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(unitarity_defect(f.exact(1.9, 0.3)) < 1e-12);
    CHECK((f.exact(1.9, 1.1) * f.exact(1.1, 0.3) - f.exact(1.9, 0.3)).norm() < 1e-12);
    // i dU/dt = H(t) U
    const double t = 1.2, s = 0.4, h = 1e-5;
    const Mat du = (f.exact(t + h, s) - f.exact(t - h, s)) / (2 * h);
    CHECK((kI * du - f.hamiltonian.eval(t) * f.exact(t, s)).norm() < 1e-7);
    CHECK(max_asymmetry(f.hamiltonian.eval(t)) < 1e-13);
    if (f.hamiltonian.deriv) {
      const Mat dh = (f.hamiltonian.eval(t + h) - f.hamiltonian.eval(t - h)) / (2 * h);
      CHECK(((*f.hamiltonian.deriv)(t) - dh).norm() < 1e-7);
    }
  }
  CHECK_THROWS(synthetic_family("unknown", 4, 1.0));
}

TEST_CASE("seeded deviates are reproducible", "[models]") {
  SeededUniform a(42), b(42), c(43);
  bool differ = false;
  for (int k = 0; k < 100; ++k) {
    const double x = a(), y = b(), z = c();
    CHECK(x == y);
    CHECK(x >= -1.0);
    CHECK(x < 1.0);
    differ = differ || x != z;
  }
  CHECK(differ);
  CHECK(synthetic_family("rotating_frame", 3, 1.0, 5).hamiltonian.eval(0.3) ==
        synthetic_family("rotating_frame", 3, 1.0, 5).hamiltonian.eval(0.3));
}
