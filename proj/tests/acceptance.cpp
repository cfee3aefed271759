// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance                 run all criteria
//   acceptance --criterion N   run criterion N only
// Exit status is non-zero when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "tdform/tdform.hpp"

using namespace tdform;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::mt19937_64 rng(7);

Vec random_vector(Index n) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (Index j = 0; j < n; ++j) v(j) = cplx(nd(rng), nd(rng));
  return v;
}

Mat random_matrix(Index n) {
  Mat m(n, n);
  for (Index j = 0; j < n; ++j) m.col(j) = random_vector(n);
  return m;
}

Mat random_hermitian(Index n) {
  const Mat m = random_matrix(n);
  return (m + m.adjoint()) * 0.5;
}

Mat random_spd(Index n) {
  const Mat m = random_matrix(n);
  return m * m.adjoint() + Mat::Identity(n, n);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

double slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<ModulusPoint> pts;
  for (std::size_t j = 0; j < x.size(); ++j) pts.push_back({x[j], y[j]});
  return loglog_slope(pts, static_cast<int>(pts.size()));
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec mode_state(const CircleDeltaModel& m, int k) {
  Vec v = Vec::Zero(m.dim());
  v(m.position(k)) = 1.0;
  return v;
}

Outcome representation_roundtrip() {
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + trial % 8;
    const HermitianForm form(random_hermitian(n));
    worst = std::max(worst, representation_defect(represent_form(form)));
  }
  return {worst < 1e-12, "max basis-pair defect " + fmt(worst) + " over 100 forms"};
}

Outcome scale_duality() {
  double dc = 0.0, recip = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + trial % 8;
    const Mat a1 = random_spd(n), a2 = random_spd(n);
    const HilbertScale s1(a1 - Mat::Identity(n, n), {0.0}), s2(a2 - Mat::Identity(n, n), {0.0});
    const auto plus = equivalence_constant(s1, s2);
    const auto minus = duality_constant(s1, s2);
    dc = std::max(dc, std::abs(plus.c - minus.c));
    for (Index j = 0; j < n; ++j)
      recip = std::max(recip, std::abs(plus.spectrum(j) * minus.spectrum(n - 1 - j) - 1.0));
  }
  return {dc < 1e-10 && recip < 1e-10, "max |c+ - c-| " + fmt(dc) + ", max reciprocal-spectrum defect " + fmt(recip)};
}

Outcome form_norm_identity() {
  double violation = 0.0, attain = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + trial % 7;
    const Mat v = random_hermitian(n), a0 = random_spd(n);
    const FormNormResult r = form_operator_norm_detail(v, a0);
    auto plus = [&](const Vec& x) { return std::sqrt(x.dot(a0 * x).real()); };
    for (int k = 0; k < 10000; ++k) {
      const Vec psi = random_vector(n), phi = random_vector(n);
      const double ratio = std::abs(psi.dot(v * phi)) / (plus(psi) * plus(phi));
      violation = std::max(violation, ratio - r.norm);
    }
    const Vec& x = r.extremal;
    attain = std::max(attain, std::abs(std::abs(x.dot(v * x)) / (plus(x) * plus(x)) - r.norm));
  }
  return {violation <= 1e-12 && attain < 1e-8,
          "max sampled excess " + fmt(std::max(0.0, violation)) + ", extremal-vector gap " + fmt(attain)};
}

Outcome remark_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto tdh = circle_delta_model(16, AlphaProfile::sine(), kTwoPi);
  const S2Result r = check_S2(tdh, TimeGrid::uniform(0.0, kTwoPi, 257));
  double worst = 0.0;
  for (std::size_t j = 0; j < r.local.size(); ++j) worst = std::max(worst, std::abs(r.local[j] - r.local_dual[j]));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {r.local.size() == 257 && worst <= 1e-10 && secs < 5.0,
          "max formula gap " + fmt(worst) + " at 257 points in " + fmt(secs) + " s"};
}

Outcome s1_audit() {
  const auto tdh = circle_delta_model(16, AlphaProfile::sine(), kTwoPi);
  const TimeGrid grid = TimeGrid::uniform(0.0, kTwoPi, 33);
  const S1Result r = check_S1(tdh, grid, 0.0);
  const Mat a0 = tdh.shifted(0.0);
  double worst = 0.0;
  for (double t : grid.points()) {
    const Mat a = tdh.shifted(t);
    for (int k = 0; k < 10000; ++k) {
      const Vec v = random_vector(tdh.dim);
      const double q = v.dot(a * v).real() / v.dot(a0 * v).real();
      worst = std::max({worst, q, 1.0 / q});
    }
  }
  return {std::isfinite(r.C) && worst <= r.C_squared,
          "C = " + fmt(r.C) + ", C^2 = " + fmt(r.C_squared) + ", max sampled ratio " + fmt(worst)};
}

Outcome k_implies_s() {
  const TimeGrid grid = TimeGrid::uniform(0.0, kTwoPi, 257);
  const std::vector<std::pair<std::string, AlphaProfile>> smooth = {
      {"sin", AlphaProfile::sine()},
      {"cos", AlphaProfile::trigonometric(0.5, 2.0, 1.0, std::numbers::pi / 2)},
      {"poly", AlphaProfile::polynomial({0.2, -0.5, 0.1})},
      {"slow", AlphaProfile::trigonometric(-1.0, 3.0, 0.5, 0.3)},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, a] : smooth) {
    const AssumptionReport r = bridge_check(circle_delta_model(16, a, kTwoPi), grid);
    const bool good = r.verdicts.k2 && std::isfinite(r.s1.C) && std::isfinite(r.s2.bound);
    ok = ok && good;
    detail += name + (good ? " ok; " : " FAILED; ");
  }
  const AssumptionReport rough =
      bridge_check(circle_delta_model(16, AlphaProfile::rough_c0(1.0, 0.05, std::numbers::pi), kTwoPi), grid);
  const bool asym = rough.verdicts.s2 && std::isfinite(rough.s2.bound) && !rough.verdicts.k2 &&
                    rough.k2.plateau > 10.0 * rough.k2.threshold;
  detail += "rough_c0: S2 bound " + fmt(rough.s2.bound) + ", K2 plateau " + fmt(rough.k2.plateau) + " vs threshold " +
            fmt(rough.k2.threshold);
  return {ok && asym, detail};
}

Outcome unitarity() {
  const CircleDeltaModel model(16, AlphaProfile::sine(), kTwoPi);
  const PropagatorTable tab = reference_propagator(model.hamiltonian(), 0.0, kTwoPi, 2048);
  double defect = 0.0;
  for (double d : tab.unitarity_defect) defect = std::max(defect, d);
  double drift = 0.0;
  for (int k = -16; k <= 16; k += 4) {
    const Trajectory tr = apply_table(tab, mode_state(model, k));
    for (const Vec& v : tr.states) drift = std::max(drift, std::abs(v.norm() - 1.0));
  }
  return {defect <= 1e-10 && drift <= 1e-10, "max ||U*U - I|| " + fmt(defect) + ", norm drift " + fmt(drift)};
}

Outcome free_model() {
  const CircleDeltaModel model(16, AlphaProfile::constant(0.0), kTwoPi);
  const PropagatorTable tab = reference_propagator(model.hamiltonian(), 0.0, kTwoPi, 256);
  double worst = 0.0;
  for (std::size_t j = 0; j < tab.times.size(); ++j)
    for (int k = -16; k <= 16; ++k) {
      const cplx expect = std::exp(-kI * (double(k) * k * tab.times[j]));
      Vec col = tab.U[j].col(model.position(k));
      col(model.position(k)) -= expect;
      worst = std::max(worst, col.norm());
    }
  return {worst <= 1e-10, "max phase error " + fmt(worst) + " over |k| <= 16"};
}

Outcome weak_residual_order() {
  const CircleDeltaModel model(16, AlphaProfile::sine(), 1.0);
  const auto tdh = model.hamiltonian();
  const Mat tests = Mat::Identity(tdh.dim, tdh.dim);
  std::vector<double> n, res;
  for (int steps : {256, 512, 1024, 2048}) {
    const Trajectory tr = propagate(tdh, 0.0, 1.0, mode_state(model, 1), MethodSpec::magnus2(steps));
    n.push_back(steps);
    res.push_back(weak_residual(tdh, tr, tests).weak_residual);
  }
  const double slope = -slope_fit(n, res);
  return {std::abs(slope - 2.0) <= 0.5, "fitted slope " + fmt(slope) + " (residual " + fmt(res.front()) + " -> " +
                                            fmt(res.back()) + ")"};
}

Outcome dyson_order() {
  const auto tdh = circle_delta_model(2, AlphaProfile::sine(), 1.0);
  bool ok = true;
  std::string detail;
  for (int k : {1, 2}) {
    std::vector<Mat> u;
    const std::vector<int> steps = {64, 128, 256, 512, 1024};
    for (int s : steps) u.push_back(dyson_propagator(tdh, 0.0, 1.0, k, s).U.back());
    std::vector<double> x, e;
    for (std::size_t j = 0; j + 1 < u.size(); ++j) {
      x.push_back(steps[j]);
      e.push_back((u[j] - u[j + 1]).norm());
    }
    const double slope = -slope_fit(x, e);
    ok = ok && std::abs(slope - k) <= 0.5;
    detail += "order " + std::to_string(k) + ": slope " + fmt(slope) + "; ";
  }
  return {ok, detail};
}

Outcome yosida_convergence() {
  const std::vector<int> ns = {4, 8, 16, 32, 64};
  const CircleDeltaModel model(16, AlphaProfile::sine(), 1.0);
  const auto rows = yosida_convergence_study(model.hamiltonian(), ns, mode_state(model, 1), 0.0, 1.0, MethodSpec::magnus4(256));
  bool decreasing = true;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < rows.size(); ++j) {
    decreasing = decreasing && rows[j].err_H < rows[j - 1].err_H;
    min_ratio = std::min(min_ratio, rows[j].ratio);
  }
  const bool part1 = decreasing && min_ratio >= 1.5;

  const auto k8 = circle_delta_model(8, AlphaProfile::sine(), 1.0);
  std::vector<double> gap;
  for (int n : ns) gap.push_back(yosida_generator_gap(k8, n, 0.0));
  const InverseFit fit = fit_inverse_n(ns, gap);
  const bool part2 = fit.max_rel_deviation <= 0.2;
  return {part1 && part2, std::string("err_H ") + (decreasing ? "decreasing" : "NOT decreasing") + ", min ratio " +
                              fmt(min_ratio) + "; ||H_n - H||_{+-} " + fmt(gap.front()) + " -> " + fmt(gap.back()) +
                              ", best c/n fit deviates " + fmt(100.0 * fit.max_rel_deviation) + "%"};
}

// Root of the symmetric-sector secular function in (lo, hi) by bisection.
double secular_root(int K, double c, double lo, double hi) {
  auto f = [&](double x) {
    double s = 0.0;
    for (int k = -K; k <= K; ++k) s += 1.0 / (double(k) * k - x);
    return 1.0 + c * s;
  };
  const double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    ((f(mid) < 0) == (flo < 0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Outcome spectral_oracle() {
  const int K = 16;
  const CircleDeltaModel model(K, AlphaProfile::sine(), kTwoPi);
  double sec = 0.0, root_gap = 0.0, anti = 0.0;
  const TimeGrid grid = TimeGrid::uniform(0.0, kTwoPi, 33);
  for (double t : grid.points()) {
    const double a = std::sin(t);
    const SectorSpectrum sp = sector_spectrum(model, t);
    for (Index k = 0; k < sp.antisymmetric.size(); ++k)
      anti = std::max(anti, std::abs(sp.antisymmetric(k) - double((k + 1) * (k + 1))));
    if (std::abs(a) < 1e-12) continue;
    sec = std::max(sec, sp.max_secular_residual);
    const double c = a / kTwoPi;
    for (Index j = 0; j < sp.symmetric.size(); ++j) {
      const double lam = sp.symmetric(j);
      // bracket between the poles enclosing lam
      double lo = -1e3, hi = 1e3;
      for (int k = 0; k <= K; ++k) {
        const double p = double(k) * k;
        if (p < lam) lo = std::max(lo, p);
        if (p > lam) hi = std::min(hi, p);
      }
      const double eps = 1e-14 * std::max(1.0, std::abs(lam));
      root_gap = std::max(root_gap, std::abs(secular_root(K, c, lo + eps, hi - eps) - lam) / std::max(1.0, std::abs(lam)));
    }
  }
  const CircleDeltaModel zero(K, AlphaProfile::constant(0.0), 1.0);
  const double d = 1e-4;
  const double slope = (lambda_min(zero.matrix_at_strength(d)) - lambda_min(zero.matrix_at_strength(-d))) / (2 * d);
  const double rel = std::abs(slope * kTwoPi - 1.0);
  return {sec <= 1e-8 && root_gap <= 1e-8 && anti <= 1e-12 && rel <= 0.01,
          "secular residual " + fmt(sec) + ", root gap " + fmt(root_gap) + ", antisymmetric deviation " + fmt(anti) +
              ", slope error " + fmt(100.0 * rel) + "%"};
}

Outcome axioms() {
  const auto tdh = circle_delta_model(16, AlphaProfile::sine(), 1.0);
  const AxiomReport r =
      propagator_axioms(reference_propagator(tdh, 0.5, 1.0, 512), reference_propagator(tdh, 0.0, 1.0, 1024));
  return {r.composition_defect <= 1e-10 && r.identity_defect == 0.0,
          "composition defect " + fmt(r.composition_defect) + " over " + std::to_string(r.compared_times) +
              " times, identity defect " + fmt(r.identity_defect)};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "tdform_acceptance_determinism";
  fs::remove_all(root);
  const std::string cfg = std::string(TDFORM_CONFIG_DIR) + "/circle_sin.ini";
  std::size_t compared = 0;
  for (const char* cmd : {"audit", "propagate", "spectrum"}) {
    for (const char* run : {"a", "b"}) {
      const std::string line = std::string(TDFORM_CLI_PATH) + " " + cmd + " --config " + cfg + " --out " +
                               (root / run / cmd).string() + " > /dev/null";
      if (std::system(line.c_str()) != 0) return {false, std::string("CLI run failed: ") + cmd};
    }
    for (const auto& entry : fs::directory_iterator(root / "a" / cmd)) {
      const std::string name = entry.path().filename().string();
      if (name == "run.json") continue;
      if (slurp(entry.path()) != slurp(root / "b" / cmd / name)) return {false, "differs: " + std::string(cmd) + "/" + name};
      ++compared;
    }
  }
  return {compared >= 12, std::to_string(compared) + " CSV/JSON artifacts byte-identical across two runs"};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c = {
      {"representation roundtrip", representation_roundtrip},
      {"scale duality", scale_duality},
      {"form-norm identity", form_norm_identity},
      {"two-formula S2 identity", remark_identity},
      {"S1 audit", s1_audit},
      {"K2 implies S1/S2; rough profile asymmetry", k_implies_s},
      {"unitarity and norm conservation", unitarity},
      {"free-model exactness", free_model},
      {"weak-equation residual order", weak_residual_order},
      {"Dyson order", dyson_order},
      {"Yosida convergence", yosida_convergence},
      {"spectral oracle", spectral_oracle},
      {"propagator axioms", axioms},
      {"determinism", determinism},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--criterion" && i + 1 < argc) selected.push_back(std::atoi(argv[++i]));
    else {
      std::cerr << "usage: acceptance [--criterion N]\n";
      return 2;
    }
  }
  if (selected.empty())
    for (int k = 1; k <= static_cast<int>(criteria().size()); ++k) selected.push_back(k);

  int failures = 0;
  for (int k : selected) {
    if (k < 1 || k > static_cast<int>(criteria().size())) {
      std::cerr << "no criterion " << k << "\n";
      return 2;
    }
    const Criterion& c = criteria()[static_cast<std::size_t>(k - 1)];
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << k << "] " << c.name << ": " << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
