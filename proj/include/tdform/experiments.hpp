#pragma once

// Experiment drivers behind the command line tool. Each run writes its data
// files (deterministic for a given config), the effective config, a
// plotdata.csv, and run.json: the only file carrying timestamps and timings.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>

#include "tdform/config.hpp"
#include "tdform/output.hpp"
#include "tdform/propagator.hpp"

namespace tdform {

inline constexpr const char* kVersion = "0.1.0";

struct ModelInstance {
  TimeDependentHamiltonian tdh;
  std::optional<CircleDeltaModel> circle;
  std::optional<SyntheticFamily> synthetic;
};

inline ModelInstance build_model(const ExperimentConfig& c) {
  ModelInstance mi;
  if (c.model.kind == "circle_delta") {
    mi.circle.emplace(c.model.K, AlphaProfile::make(c.alpha.kind, c.alpha.params), c.model.T);
    mi.tdh = mi.circle->hamiltonian();
  } else {
    mi.synthetic = synthetic_family(c.model.kind, c.model.n, c.model.T, c.model.seed);
    mi.tdh = mi.synthetic->hamiltonian;
  }
  return mi;
}

// Coefficient position of a configured mode / basis index.
inline Index mode_position(const ModelInstance& mi, int mode) {
  return mi.circle ? mi.circle->position(mode) : static_cast<Index>(mode);
}

inline Vec initial_state(const ExperimentConfig& c, const ModelInstance& mi) {
  if (!c.initial.coefficients.empty()) {
    Vec v(static_cast<Index>(c.initial.coefficients.size()));
    for (Index j = 0; j < v.size(); ++j) v(j) = c.initial.coefficients[static_cast<std::size_t>(j)];
    if (!(v.norm() > 0.0)) throw ConfigError({"initial.coefficients must not all vanish"});
    return v / v.norm();
  }
  Vec v = Vec::Zero(mi.tdh.dim);
  v(mode_position(mi, c.initial.mode)) = 1.0;
  return v;
}

inline MethodSpec method_from_config(const ExperimentConfig& c, int steps) {
  const auto& p = c.propagator;
  MethodSpec m = p.method == "dyson"     ? MethodSpec::dyson(p.order, steps)
                 : p.method == "magnus4" ? MethodSpec::magnus4(steps)
                                         : MethodSpec::magnus2(steps);
  if (p.yosida_n > 0) m.yosida_n = p.yosida_n;
  return m;
}

inline bool wants(const ExperimentConfig& c, const std::string& fmt) {
  return std::find(c.output.formats.begin(), c.output.formats.end(), fmt) != c.output.formats.end();
}

struct RunRecord {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  double wall_time_seconds = 0.0;
  std::string started_at;               // UTC, ISO 8601
  std::vector<std::string> outputs;     // file names relative to the out dir
  std::filesystem::path directory;
};

namespace detail {

inline std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

// Bookkeeping shared by all drivers.
class RunWriter {
 public:
  RunWriter(std::string command, const ExperimentConfig& c, std::filesystem::path dir)
      : cfg_(c), start_(std::chrono::steady_clock::now()) {
    rec_.command = std::move(command);
    rec_.config_hash = config_hash(c);
    rec_.seed = c.model.seed;
    rec_.started_at = utc_now();
    rec_.directory = std::move(dir);
  }

  void file(const std::string& name, const std::string& content) {
    write_atomic(rec_.directory / name, content);
    rec_.outputs.push_back(name);
  }
  void csv(const std::string& name, const CsvTable& t) {
    if (wants(cfg_, "csv")) file(name, t.str());
  }
  void json(const std::string& name, const Json& j) {
    if (wants(cfg_, "json")) file(name, json_text(j));
  }

  const std::string& hash() const { return rec_.config_hash; }

  RunRecord finish(const std::vector<PlotSeries>& series) {
    file("config.ini", serialize_config(cfg_));
    file("plotdata.csv", emit_plotdata({PlotRecord{rec_.config_hash, series}}));
    rec_.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json j;
    j["command"] = rec_.command;
    j["config_hash"] = rec_.config_hash;
    j["seed"] = rec_.seed;
    j["version"] = rec_.version;
    j["eigen_version"] = eigen_version();
    j["started_at"] = rec_.started_at;
    j["wall_time_seconds"] = rec_.wall_time_seconds;
    j["outputs"] = rec_.outputs;
    write_atomic(rec_.directory / "run.json", json_text(j));
    return rec_;
  }

 private:
  const ExperimentConfig& cfg_;
  std::chrono::steady_clock::time_point start_;
  RunRecord rec_;
};

inline Json header_json(const ExperimentConfig& c, const ModelInstance& mi, const std::string& hash) {
  Json j;
  j["config_hash"] = hash;
  j["model"] = mi.tdh.label;
  j["dim"] = mi.tdh.dim;
  j["t_begin"] = c.time.start;
  j["t_end"] = c.model.T;
  j["semibound"] = mi.tdh.uniform_semibound.m;
  return j;
}

inline const char* verdict(bool pass) { return pass ? "pass" : "fail"; }

inline std::string mode_label(const ModelInstance& mi, int mode) {
  return mi.circle ? "k" + std::to_string(mode) : "c" + std::to_string(mode);
}

inline std::vector<double> as_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

inline Json rows_json(const std::vector<ConvergenceRow>& rows, const char* key) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json o;
    o[key] = r.parameter;
    o["err_H"] = r.err_H;
    o["err_plus"] = r.err_plus;
    o["ratio"] = r.ratio;
    arr.push_back(o);
  }
  return arr;
}

}  // namespace detail

inline TimeGrid audit_grid(const ExperimentConfig& c, int grid_refine) {
  const std::size_t n = static_cast<std::size_t>(c.audit.grid_points - 1) * (std::size_t{1} << grid_refine) + 1;
  TimeGrid g = TimeGrid::uniform(c.time.start, c.model.T, n);
  if (!c.audit.refine_near.empty()) g = g.refined_near(c.audit.refine_near, c.audit.refine_levels);
  return g;
}

struct AuditOutcome {
  AssumptionReport report;
  RunRecord record;
};

inline AuditOutcome run_audit(const ExperimentConfig& c, const std::filesystem::path& out, int grid_refine = 0) {
  detail::RunWriter w("audit", c, out);
  const ModelInstance mi = build_model(c);
  const TimeGrid grid = audit_grid(c, grid_refine);

  AuditOptions opt;
  opt.t0 = c.audit.t0;
  opt.k2.order = c.audit.k2_order;
  opt.k2.slope_threshold = c.audit.slope_threshold;
  opt.k2.noise_factor = c.audit.noise_factor;
  opt.k2.max_levels = c.audit.max_levels;
  opt.k2.fit_levels = c.audit.fit_levels;
  opt.k2.fd_step = c.audit.fd_step;
  opt.s2.fd_step = c.audit.fd_step;
  AuditOutcome res;
  res.report = bridge_check(mi.tdh, grid, opt);
  const AssumptionReport& r = res.report;

  CsvTable table({"t", "lambda_min", "lambda_max_pencil", "lambda_min_pencil", "S2_local", "K2_omega_at_t"});
  for (std::size_t j = 0; j < r.grid.size(); ++j)
    table.add_row({CsvTable::cell(r.grid[j]), CsvTable::cell(r.lambda_min[j]),
                   CsvTable::cell(r.s1.lambda_max_pencil[j]), CsvTable::cell(r.s1.lambda_min_pencil[j]),
                   CsvTable::cell(r.s2.local[j]), CsvTable::cell(r.k2.local_omega[j])});
  w.csv("audit.csv", table);

  CsvTable modulus({"delta", "omega"});
  for (const auto& p : r.k2.modulus) modulus.add_row({CsvTable::cell(p.delta), CsvTable::cell(p.omega)});
  w.csv("audit_modulus.csv", modulus);

  Json j = detail::header_json(c, mi, w.hash());
  j["grid_points"] = r.grid.size();
  j["t0"] = c.audit.t0;
  j["C"] = r.s1.C;
  j["C_squared"] = r.s1.C_squared;
  j["C_shifted_reference"] = r.s1.C_alt;
  j["S2_bound"] = r.s2.bound;
  j["S2_identity_defect"] = r.s2.identity_defect;
  j["S2_analytic_derivative"] = r.s2.analytic_derivative;
  Json k2;
  k2["order"] = r.k2.order;
  k2["sup_norm"] = r.k2.sup_norm;
  k2["threshold"] = r.k2.threshold;
  k2["plateau"] = r.k2.plateau;
  k2["slope"] = r.k2.slope;
  Json mod = Json::array();
  for (const auto& p : r.k2.modulus) mod.push_back(Json::array({p.delta, p.omega}));
  k2["modulus"] = mod;
  j["K2"] = k2;
  Json v;
  v["S1"] = detail::verdict(r.verdicts.s1);
  v["S2"] = detail::verdict(r.verdicts.s2);
  v["K2"] = detail::verdict(r.verdicts.k2);
  v["K_implies_S"] = detail::verdict(r.verdicts.k_implies_s);
  v["S_without_K"] = r.verdicts.s_without_k;
  j["verdicts"] = v;
  w.json("audit.json", j);

  std::vector<PlotSeries> series = {
      {"lambda_min", r.grid, r.lambda_min},
      {"lambda_max_pencil", r.grid, r.s1.lambda_max_pencil},
      {"lambda_min_pencil", r.grid, r.s1.lambda_min_pencil},
      {"S2_local", r.grid, r.s2.local},
      {"K2_omega_at_t", r.grid, r.k2.local_omega},
  };
  PlotSeries ms{"K2_modulus", {}, {}};
  for (const auto& p : r.k2.modulus) {
    ms.x.push_back(p.delta);
    ms.y.push_back(p.omega);
  }
  series.push_back(ms);
  res.record = w.finish(series);
  return res;
}

struct PropagationOutcome {
  Trajectory trajectory;
  ResidualReport residual;
  double unitarity_defect = 0.0;
  RunRecord record;
};

inline PropagationOutcome run_propagation(const ExperimentConfig& c, const std::filesystem::path& out,
                                          int grid_refine = 0) {
  detail::RunWriter w("propagate", c, out);
  const ModelInstance mi = build_model(c);
  const Vec psi0 = initial_state(c, mi);
  const int steps = c.time.steps * (1 << grid_refine);
  const MethodSpec method = method_from_config(c, steps);
  const PropagatorTable table = build_propagator(mi.tdh, c.time.start, c.model.T, method);

  PropagationOutcome res;
  res.trajectory = apply_table(table, psi0);
  res.residual = weak_residual(mi.tdh, res.trajectory, Mat::Identity(mi.tdh.dim, mi.tdh.dim), c.time.start);
  for (double d : table.unitarity_defect) res.unitarity_defect = std::max(res.unitarity_defect, d);
  const HilbertScale scale = mi.tdh.scale_at(c.time.start);

  std::vector<int> modes = c.output.modes;
  if (modes.empty()) modes.push_back(c.initial.coefficients.empty() ? c.initial.mode : 0);

  std::vector<std::string> header = {"t"};
  for (int k : modes) {
    header.push_back("re_" + detail::mode_label(mi, k));
    header.push_back("im_" + detail::mode_label(mi, k));
  }
  for (const char* h : {"norm_H", "norm_plus", "weak_residual_local"}) header.emplace_back(h);
  CsvTable csv(header);

  const auto& tr = res.trajectory;
  std::vector<double> norm_h, norm_p;
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    std::vector<std::string> row = {CsvTable::cell(tr.times[j])};
    for (int k : modes) {
      const cplx z = tr.states[j](mode_position(mi, k));
      row.push_back(CsvTable::cell(z.real()));
      row.push_back(CsvTable::cell(z.imag()));
    }
    norm_h.push_back(tr.states[j].norm());
    norm_p.push_back(scale.norm_plus(tr.states[j]));
    row.push_back(CsvTable::cell(norm_h.back()));
    row.push_back(CsvTable::cell(norm_p.back()));
    // the local residual of row j is the one on the interval ending at t_j
    row.push_back(j == 0 ? std::string() : CsvTable::cell(res.residual.local_weak[j - 1]));
    csv.add_row(std::move(row));
  }
  w.csv("trajectory.csv", csv);

  const ResidualReport& rr = res.residual;
  Json j = detail::header_json(c, mi, w.hash());
  j["method"] = method.describe();
  j["steps"] = steps;
  j["weak_residual_max"] = rr.weak_residual;
  j["weak_residual_rms"] = rr.weak_residual_l2;
  j["weak_residual_dual_norm"] = rr.weak_dual_norm;
  j["strong_residual_H"] = rr.strong_residual_H;
  j["strong_residual_minus"] = rr.strong_residual_minus;
  j["norm_drift"] = rr.norm_drift;
  j["unitarity_defect"] = res.unitarity_defect;
  j["final_norm_H"] = norm_h.back();
  j["final_norm_plus"] = norm_p.back();
  w.json("propagation.json", j);

  std::vector<PlotSeries> series = {{"norm_H", tr.times, norm_h},
                                    {"norm_plus", tr.times, norm_p},
                                    {"weak_residual_local", rr.midpoints, rr.local_weak}};
  for (int k : modes) {
    PlotSeries s{"abs_" + detail::mode_label(mi, k), tr.times, {}};
    for (const Vec& v : tr.states) s.y.push_back(std::abs(v(mode_position(mi, k))));
    series.push_back(std::move(s));
  }
  res.record = w.finish(series);
  return res;
}

struct ConvergenceOutcome {
  std::vector<ConvergenceRow> yosida;
  std::vector<double> generator_gap;  // ||H_n - H||_{+-} at the start time
  std::vector<ConvergenceRow> steps;
  RunRecord record;
};

// log(ratio) / log(p_j / p_{j-1}); empty for the first row.
inline std::vector<double> observed_slopes(const std::vector<ConvergenceRow>& rows) {
  std::vector<double> s(rows.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 1; j < rows.size(); ++j)
    s[j] = std::log(rows[j].ratio) / std::log(static_cast<double>(rows[j].parameter) / rows[j - 1].parameter);
  return s;
}

inline ConvergenceOutcome run_convergence(const ExperimentConfig& c, const std::filesystem::path& out) {
  if (c.propagator.n_list.empty() && c.time.steps_list.empty())
    throw ConfigError({"converge needs propagator.n_list or time.steps_list"});
  detail::RunWriter w("converge", c, out);
  const ModelInstance mi = build_model(c);
  const Vec psi0 = initial_state(c, mi);
  const double s = c.time.start, t = c.model.T;
  Json j = detail::header_json(c, mi, w.hash());
  std::vector<PlotSeries> series;
  ConvergenceOutcome res;

  auto table_for = [](const std::vector<ConvergenceRow>& rows, const char* key, const std::vector<double>* extra) {
    std::vector<std::string> header = {key, "err_H", "err_plus", "ratio", "slope"};
    if (extra) header.emplace_back("generator_gap");
    CsvTable tab(header);
    const auto slopes = observed_slopes(rows);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::vector<std::string> row = {CsvTable::cell(rows[k].parameter), CsvTable::cell(rows[k].err_H),
                                      CsvTable::cell(rows[k].err_plus), k ? CsvTable::cell(rows[k].ratio) : "",
                                      k ? CsvTable::cell(slopes[k]) : ""};
      if (extra) row.push_back(CsvTable::cell((*extra)[k]));
      tab.add_row(std::move(row));
    }
    return tab;
  };

  if (!c.propagator.n_list.empty()) {
    MethodSpec inner = c.propagator.inner == "magnus2" ? MethodSpec::magnus2(c.time.steps) : MethodSpec::magnus4(c.time.steps);
    res.yosida = yosida_convergence_study(mi.tdh, c.propagator.n_list, psi0, s, t, inner);
    for (int n : c.propagator.n_list) res.generator_gap.push_back(yosida_generator_gap(mi.tdh, n, s));
    w.csv("convergence_yosida.csv", table_for(res.yosida, "n", &res.generator_gap));
    Json y;
    y["inner"] = inner.describe();
    y["rows"] = detail::rows_json(res.yosida, "n");
    y["generator_gap"] = res.generator_gap;
    const InverseFit fit = fit_inverse_n(c.propagator.n_list, res.generator_gap);
    y["generator_gap_fit_c"] = fit.c;
    y["generator_gap_fit_max_rel_deviation"] = fit.max_rel_deviation;
    j["yosida"] = y;
    PlotSeries e{"yosida_err_H", detail::as_doubles(c.propagator.n_list), {}};
    for (const auto& r : res.yosida) e.y.push_back(r.err_H);
    series.push_back(std::move(e));
    series.push_back({"yosida_generator_gap", detail::as_doubles(c.propagator.n_list), res.generator_gap});
  }
  if (!c.time.steps_list.empty()) {
    const MethodSpec method = method_from_config(c, c.time.steps_list.front());
    res.steps = step_convergence_study(mi.tdh, c.time.steps_list, psi0, s, t, method);
    w.csv("convergence_steps.csv", table_for(res.steps, "steps", nullptr));
    Json st;
    st["method"] = method.describe();
    st["rows"] = detail::rows_json(res.steps, "steps");
    std::vector<ModulusPoint> pts;
    for (const auto& r : res.steps) pts.push_back({static_cast<double>(r.parameter), r.err_H});
    st["fitted_order"] = -loglog_slope(pts, static_cast<int>(pts.size()));
    j["steps"] = st;
    PlotSeries e{"steps_err_H", detail::as_doubles(c.time.steps_list), {}};
    for (const auto& r : res.steps) e.y.push_back(r.err_H);
    series.push_back(std::move(e));
  }
  w.json("convergence.json", j);
  res.record = w.finish(series);
  return res;
}

struct SpectrumOutcome {
  double min_eigenvalue = 0.0;
  double max_secular_residual = 0.0;
  double max_antisymmetric_deviation = 0.0;
  RunRecord record;
};

// Eigenvalues of H(t) on the audit grid; for the circle model also the
// symmetry sectors and the secular-equation residual.
inline SpectrumOutcome run_spectrum(const ExperimentConfig& c, const std::filesystem::path& out, int grid_refine = 0) {
  detail::RunWriter w("spectrum", c, out);
  const ModelInstance mi = build_model(c);
  const TimeGrid grid = audit_grid(c, grid_refine);
  SpectrumOutcome res;
  res.min_eigenvalue = std::numeric_limits<double>::infinity();
  CsvTable tab({"t", "sector", "index", "eigenvalue", "secular_residual"});
  std::vector<PlotSeries> series;
  auto series_at = [&series](const std::string& name) -> PlotSeries& {
    for (auto& s : series)
      if (s.name == name) return s;
    series.push_back({name, {}, {}});
    return series.back();
  };
  for (double t : grid.points()) {
    if (mi.circle) {
      const SectorSpectrum sp = sector_spectrum(*mi.circle, t);
      const double a = mi.circle->alpha()(t);
      res.max_secular_residual = std::max(res.max_secular_residual, sp.max_secular_residual);
      for (Index k = 0; k < sp.symmetric.size(); ++k) {
        const double lam = sp.symmetric(k);
        res.min_eigenvalue = std::min(res.min_eigenvalue, lam);
        const double sec = a != 0.0 && !on_pole(mi.circle->K(), lam) ? secular_residual(mi.circle->K(), a, lam) : 0.0;
        tab.add_row({CsvTable::cell(t), "symmetric", CsvTable::cell(static_cast<int>(k)), CsvTable::cell(lam),
                     CsvTable::cell(sec)});
        if (k < 4) {
          auto& s = series_at("symmetric_" + std::to_string(k));
          s.x.push_back(t);
          s.y.push_back(lam);
        }
      }
      for (Index k = 0; k < sp.antisymmetric.size(); ++k) {
        const double lam = sp.antisymmetric(k);
        const double kk = static_cast<double>(k + 1);
        res.max_antisymmetric_deviation = std::max(res.max_antisymmetric_deviation, std::abs(lam - kk * kk));
        tab.add_row({CsvTable::cell(t), "antisymmetric", CsvTable::cell(static_cast<int>(k)), CsvTable::cell(lam), ""});
      }
    } else {
      const RVec ev = spectrum(mi.tdh, t);
      res.min_eigenvalue = std::min(res.min_eigenvalue, ev.minCoeff());
      for (Index k = 0; k < ev.size(); ++k) {
        tab.add_row({CsvTable::cell(t), "all", CsvTable::cell(static_cast<int>(k)), CsvTable::cell(ev(k)), ""});
        if (k < 4) {
          auto& s = series_at("eigenvalue_" + std::to_string(k));
          s.x.push_back(t);
          s.y.push_back(ev(k));
        }
      }
    }
  }
  w.csv("spectrum.csv", tab);
  Json j = detail::header_json(c, mi, w.hash());
  j["grid_points"] = grid.size();
  j["min_eigenvalue"] = res.min_eigenvalue;
  if (mi.circle) {
    j["max_secular_residual"] = res.max_secular_residual;
    j["max_antisymmetric_deviation"] = res.max_antisymmetric_deviation;
  }
  w.json("spectrum.json", j);
  res.record = w.finish(series);
  return res;
}

}  // namespace tdform
