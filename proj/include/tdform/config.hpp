#pragma once

// Experiment configuration: an INI document with the sections below. Every
// key is optional; unknown sections and keys are errors. Lists are comma
// separated; complex numbers are written re:im.
//
//   [model]      kind = circle_delta | constant | commuting_diagonal | rotating_frame
//                K (circle cutoff), n (synthetic dimension), seed, T (end time),
//                alpha = sin | cos | zero   (shorthand, excludes an [alpha] section)
//   [alpha]      kind = constant | polynomial | trigonometric | kink | rough_c0 | table
//                params = parameter list (see AlphaProfile)
//   [time]       start, steps, steps_list
//   [propagator] method = magnus2 | magnus4 | dyson, order, inner = magnus2 | magnus4,
//                yosida_n (0: exact generator), n_list
//   [initial]    mode (Fourier index k, or basis index for synthetic models),
//                coefficients (overrides mode)
//   [audit]      grid_points, t0, k2_order, slope_threshold, noise_factor,
//                max_levels, fit_levels, fd_step (0: T * 1e-4), refine_near, refine_levels
//   [output]     directory, formats = csv, json; modes (coefficients written to
//                trajectory files)

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tdform/models.hpp"

namespace tdform {

struct ModelSection {
  std::string kind = "circle_delta";
  int K = 8;
  int n = 4;
  std::uint64_t seed = 1;
  double T = 2.0 * std::numbers::pi;
  friend bool operator==(const ModelSection&, const ModelSection&) = default;
};

struct AlphaSection {
  AlphaKind kind = AlphaKind::trigonometric;
  std::vector<double> params = {0.0, 1.0, 1.0, 0.0};
  friend bool operator==(const AlphaSection&, const AlphaSection&) = default;
};

struct TimeSection {
  double start = 0.0;
  int steps = 512;
  std::vector<int> steps_list;
  friend bool operator==(const TimeSection&, const TimeSection&) = default;
};

struct PropagatorSection {
  std::string method = "magnus2";
  int order = 2;
  std::string inner = "magnus4";
  int yosida_n = 0;
  std::vector<int> n_list;
  friend bool operator==(const PropagatorSection&, const PropagatorSection&) = default;
};

struct InitialSection {
  int mode = 0;
  std::vector<cplx> coefficients;
  friend bool operator==(const InitialSection&, const InitialSection&) = default;
};

struct AuditSection {
  int grid_points = 257;
  double t0 = 0.0;
  int k2_order = 1;
  double slope_threshold = 0.9;
  double noise_factor = 10.0;
  int max_levels = 6;
  int fit_levels = 4;
  double fd_step = 0.0;
  std::vector<double> refine_near;
  int refine_levels = 2;
  friend bool operator==(const AuditSection&, const AuditSection&) = default;
};

struct OutputSection {
  std::string directory = "out";
  std::vector<std::string> formats = {"csv", "json"};
  std::vector<int> modes;
  friend bool operator==(const OutputSection&, const OutputSection&) = default;
};

struct ExperimentConfig {
  ModelSection model;
  AlphaSection alpha;
  TimeSection time;
  PropagatorSection propagator;
  InitialSection initial;
  AuditSection audit;
  OutputSection output;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// 17 significant digits, scientific notation.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

inline std::optional<AlphaKind> parse_alpha_kind(std::string_view s) {
  for (AlphaKind k : {AlphaKind::constant, AlphaKind::polynomial, AlphaKind::trigonometric, AlphaKind::kink,
                      AlphaKind::rough_c0, AlphaKind::table})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline std::optional<double> to_double(const std::string& s) {
  const std::string t = trim(s);
  if (t == "nan" || t == "inf" || t == "-inf" || t.empty()) return std::nullopt;
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> to_integer(const std::string& s) {
  const std::string t = trim(s);
  long long v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

inline std::optional<cplx> to_complex(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    const auto re = to_double(s);
    if (!re) return std::nullopt;
    return cplx(*re, 0.0);
  }
  const auto re = to_double(s.substr(0, colon));
  const auto im = to_double(s.substr(colon + 1));
  if (!re || !im) return std::nullopt;
  return cplx(*re, *im);
}

// Reads typed values out of one parsed document and records every failure.
class Reader {
 public:
  Reader(const boost::property_tree::ptree& tree, std::vector<std::string>& errors) : tree_(tree), errors_(errors) {}

  const boost::property_tree::ptree* section(const std::string& name) const {
    const auto it = tree_.find(name);
    return it == tree_.not_found() ? nullptr : &it->second;
  }

  std::optional<std::string> raw(const std::string& sec, const std::string& key) const {
    const auto* s = section(sec);
    if (!s) return std::nullopt;
    const auto it = s->find(key);
    if (it == s->not_found()) return std::nullopt;
    return trim(it->second.data());
  }

  void string(const std::string& sec, const std::string& key, std::string& out) const {
    if (auto v = raw(sec, key)) out = *v;
  }

  template <class Int>
  void integer(const std::string& sec, const std::string& key, Int& out) const {
    if (auto v = raw(sec, key)) {
      if (auto i = to_integer(*v)) out = static_cast<Int>(*i);
      else mismatch(sec, key, "integer", *v);
    }
  }

  void real(const std::string& sec, const std::string& key, double& out) const {
    if (auto v = raw(sec, key)) {
      if (auto d = to_double(*v)) out = *d;
      else mismatch(sec, key, "number", *v);
    }
  }

  void real_list(const std::string& sec, const std::string& key, std::vector<double>& out) const {
    if (auto v = raw(sec, key)) {
      out.clear();
      for (const auto& item : split_list(*v)) {
        if (auto d = to_double(item)) out.push_back(*d);
        else return mismatch(sec, key, "list of numbers", *v);
      }
    }
  }

  void integer_list(const std::string& sec, const std::string& key, std::vector<int>& out) const {
    if (auto v = raw(sec, key)) {
      out.clear();
      for (const auto& item : split_list(*v)) {
        if (auto i = to_integer(item)) out.push_back(static_cast<int>(*i));
        else return mismatch(sec, key, "list of integers", *v);
      }
    }
  }

  void complex_list(const std::string& sec, const std::string& key, std::vector<cplx>& out) const {
    if (auto v = raw(sec, key)) {
      out.clear();
      for (const auto& item : split_list(*v)) {
        if (auto c = to_complex(item)) out.push_back(*c);
        else return mismatch(sec, key, "list of complex numbers re:im", *v);
      }
    }
  }

  void string_list(const std::string& sec, const std::string& key, std::vector<std::string>& out) const {
    if (auto v = raw(sec, key)) out = split_list(*v);
  }

 private:
  void mismatch(const std::string& sec, const std::string& key, const char* want, const std::string& got) const {
    errors_.push_back(sec + "." + key + ": expected " + want + ", got '" + got + "'");
  }

  const boost::property_tree::ptree& tree_;
  std::vector<std::string>& errors_;
};

inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"model", {"kind", "K", "n", "seed", "T", "alpha"}},
      {"alpha", {"kind", "params"}},
      {"time", {"start", "steps", "steps_list"}},
      {"propagator", {"method", "order", "inner", "yosida_n", "n_list"}},
      {"initial", {"mode", "coefficients"}},
      {"audit",
       {"grid_points", "t0", "k2_order", "slope_threshold", "noise_factor", "max_levels", "fit_levels", "fd_step",
        "refine_near", "refine_levels"}},
      {"output", {"directory", "formats", "modes"}},
  };
  return s;
}

}  // namespace detail

inline Index model_dimension(const ExperimentConfig& c) {
  return c.model.kind == "circle_delta" ? 2 * static_cast<Index>(c.model.K) + 1 : static_cast<Index>(c.model.n);
}

// Semantic checks on a typed configuration; appends to `errors`.
// check_alpha = false skips the parameter-count check, used when the kind
// itself was rejected and the count would only repeat that error.
inline void validate_config(const ExperimentConfig& c, std::vector<std::string>& errors, bool check_alpha = true) {
  auto err = [&](std::string e) { errors.push_back(std::move(e)); };
  const auto& m = c.model;
  const bool circle = m.kind == "circle_delta";
  if (!circle && m.kind != "constant" && m.kind != "commuting_diagonal" && m.kind != "rotating_frame")
    err("model.kind: unknown model '" + m.kind + "'");
  if (circle && m.K < 1) err("model.K must be positive");
  if (!circle && m.n < 2) err("model.n must be at least 2");
  if (!(m.T > 0.0)) err("model.T must be positive");
  if (circle && check_alpha) {
    try {
      (void)AlphaProfile::make(c.alpha.kind, c.alpha.params);
    } catch (const std::invalid_argument& e) {
      err(std::string("alpha.params: ") + e.what());
    }
  }
  if (c.time.steps <= 0) err("time.steps must be positive");
  if (!(c.time.start >= 0.0 && c.time.start < m.T)) err("time.start must lie in [0, model.T)");
  for (int s : c.time.steps_list)
    if (s <= 0) {
      err("time.steps_list entries must be positive");
      break;
    }
  const auto& p = c.propagator;
  if (p.method != "magnus2" && p.method != "magnus4" && p.method != "dyson")
    err("propagator.method: unknown method '" + p.method + "'");
  if (p.inner != "magnus2" && p.inner != "magnus4") err("propagator.inner: unknown method '" + p.inner + "'");
  if (p.order < 1 || p.order > 4) err("propagator.order must be in 1..4");
  if (p.yosida_n < 0) err("propagator.yosida_n must be non-negative");
  for (std::size_t j = 0; j < p.n_list.size(); ++j)
    if (p.n_list[j] <= 0 || (j > 0 && p.n_list[j] <= p.n_list[j - 1])) {
      err("propagator.n_list must be positive and strictly increasing");
      break;
    }
  const Index dim = model_dimension(c);
  if (c.initial.coefficients.empty()) {
    if (circle ? std::abs(c.initial.mode) > m.K : (c.initial.mode < 0 || c.initial.mode >= m.n))
      err("initial.mode is outside the model basis");
  } else if (static_cast<Index>(c.initial.coefficients.size()) != dim) {
    err("initial.coefficients must have " + std::to_string(dim) + " entries");
  }
  for (int k : c.output.modes)
    if (circle ? std::abs(k) > m.K : (k < 0 || k >= m.n)) {
      err("output.modes contains an index outside the model basis");
      break;
    }
  const auto& a = c.audit;
  if (a.grid_points < 8) err("audit.grid_points must be at least 8");
  if (!(a.t0 >= 0.0 && a.t0 <= m.T)) err("audit.t0 must lie in [0, model.T]");
  if (a.k2_order < 0 || a.k2_order > 2) err("audit.k2_order must be 0, 1 or 2");
  if (!(a.slope_threshold > 0.0)) err("audit.slope_threshold must be positive");
  if (!(a.noise_factor > 0.0)) err("audit.noise_factor must be positive");
  if (a.max_levels < 2) err("audit.max_levels must be at least 2");
  if (a.fit_levels < 2) err("audit.fit_levels must be at least 2");
  if (a.fd_step < 0.0) err("audit.fd_step must be non-negative");
  if (a.refine_levels < 0) err("audit.refine_levels must be non-negative");
  for (const auto& f : c.output.formats)
    if (f != "csv" && f != "json") {
      err("output.formats: unknown format '" + f + "'");
      break;
    }
}

inline ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream is(text);
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
  }

  std::vector<std::string> errors;
  const auto& schema = detail::schema();
  for (const auto& [name, sec] : tree) {
    const auto it = schema.find(name);
    if (it == schema.end()) {
      errors.push_back(sec.empty() ? "unknown key '" + name + "' outside any section" : "unknown section '" + name + "'");
      continue;
    }
    for (const auto& [key, value] : sec)
      if (!it->second.count(key)) errors.push_back("unknown key " + name + "." + key);
  }

  ExperimentConfig c;
  const detail::Reader r(tree, errors);
  r.string("model", "kind", c.model.kind);
  r.integer("model", "K", c.model.K);
  r.integer("model", "n", c.model.n);
  r.integer("model", "seed", c.model.seed);
  r.real("model", "T", c.model.T);

  const auto shorthand = r.raw("model", "alpha");
  if (shorthand && r.section("alpha")) errors.push_back("model.alpha and an [alpha] section are mutually exclusive");
  if (shorthand) {
    if (*shorthand == "sin") c.alpha = {AlphaKind::trigonometric, {0.0, 1.0, 1.0, 0.0}};
    else if (*shorthand == "cos") c.alpha = {AlphaKind::trigonometric, {0.0, 1.0, 1.0, std::numbers::pi / 2}};
    else if (*shorthand == "zero") c.alpha = {AlphaKind::constant, {0.0}};
    else errors.push_back("model.alpha: unknown shorthand '" + *shorthand + "' (sin, cos, zero)");
  }
  bool alpha_kind_ok = true;
  if (auto k = r.raw("alpha", "kind")) {
    if (auto kind = parse_alpha_kind(*k)) {
      c.alpha.kind = *kind;
      if (!r.raw("alpha", "params")) errors.push_back("alpha.params is required with alpha.kind");
    } else {
      errors.push_back("alpha.kind: unknown kind '" + *k + "'");
      alpha_kind_ok = false;
    }
  }
  r.real_list("alpha", "params", c.alpha.params);

  r.real("time", "start", c.time.start);
  r.integer("time", "steps", c.time.steps);
  r.integer_list("time", "steps_list", c.time.steps_list);

  r.string("propagator", "method", c.propagator.method);
  r.integer("propagator", "order", c.propagator.order);
  r.string("propagator", "inner", c.propagator.inner);
  r.integer("propagator", "yosida_n", c.propagator.yosida_n);
  r.integer_list("propagator", "n_list", c.propagator.n_list);

  r.integer("initial", "mode", c.initial.mode);
  r.complex_list("initial", "coefficients", c.initial.coefficients);

  r.integer("audit", "grid_points", c.audit.grid_points);
  r.real("audit", "t0", c.audit.t0);
  r.integer("audit", "k2_order", c.audit.k2_order);
  r.real("audit", "slope_threshold", c.audit.slope_threshold);
  r.real("audit", "noise_factor", c.audit.noise_factor);
  r.integer("audit", "max_levels", c.audit.max_levels);
  r.integer("audit", "fit_levels", c.audit.fit_levels);
  r.real("audit", "fd_step", c.audit.fd_step);
  r.real_list("audit", "refine_near", c.audit.refine_near);
  r.integer("audit", "refine_levels", c.audit.refine_levels);

  r.string("output", "directory", c.output.directory);
  r.string_list("output", "formats", c.output.formats);
  r.integer_list("output", "modes", c.output.modes);

  validate_config(c, errors, alpha_kind_ok);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

// Effective configuration with every default written out.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  auto reals = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t j = 0; j < v.size(); ++j) s += (j ? ", " : "") + format_double(v[j]);
    return s;
  };
  auto ints = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t j = 0; j < v.size(); ++j) s += (j ? ", " : "") + std::to_string(v[j]);
    return s;
  };
  auto strings = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t j = 0; j < v.size(); ++j) s += (j ? ", " : "") + v[j];
    return s;
  };
  os << "[model]\n"
     << "kind = " << c.model.kind << "\n"
     << "K = " << c.model.K << "\n"
     << "n = " << c.model.n << "\n"
     << "seed = " << c.model.seed << "\n"
     << "T = " << format_double(c.model.T) << "\n\n";
  os << "[alpha]\n"
     << "kind = " << to_string(c.alpha.kind) << "\n"
     << "params = " << reals(c.alpha.params) << "\n\n";
  os << "[time]\n"
     << "start = " << format_double(c.time.start) << "\n"
     << "steps = " << c.time.steps << "\n"
     << "steps_list = " << ints(c.time.steps_list) << "\n\n";
  os << "[propagator]\n"
     << "method = " << c.propagator.method << "\n"
     << "order = " << c.propagator.order << "\n"
     << "inner = " << c.propagator.inner << "\n"
     << "yosida_n = " << c.propagator.yosida_n << "\n"
     << "n_list = " << ints(c.propagator.n_list) << "\n\n";
  os << "[initial]\n"
     << "mode = " << c.initial.mode << "\n"
     << "coefficients = ";
  for (std::size_t j = 0; j < c.initial.coefficients.size(); ++j)
    os << (j ? ", " : "") << format_double(c.initial.coefficients[j].real()) << ":"
       << format_double(c.initial.coefficients[j].imag());
  os << "\n\n";
  os << "[audit]\n"
     << "grid_points = " << c.audit.grid_points << "\n"
     << "t0 = " << format_double(c.audit.t0) << "\n"
     << "k2_order = " << c.audit.k2_order << "\n"
     << "slope_threshold = " << format_double(c.audit.slope_threshold) << "\n"
     << "noise_factor = " << format_double(c.audit.noise_factor) << "\n"
     << "max_levels = " << c.audit.max_levels << "\n"
     << "fit_levels = " << c.audit.fit_levels << "\n"
     << "fd_step = " << format_double(c.audit.fd_step) << "\n"
     << "refine_near = " << reals(c.audit.refine_near) << "\n"
     << "refine_levels = " << c.audit.refine_levels << "\n\n";
  os << "[output]\n"
     << "directory = " << c.output.directory << "\n"
     << "formats = " << strings(c.output.formats) << "\n"
     << "modes = " << ints(c.output.modes) << "\n";
  return os.str();
}

// FNV-1a over the serialized effective configuration, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tdform
