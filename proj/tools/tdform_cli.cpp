// tdform_cli: audit | propagate | converge | spectrum
//   --config PATH   experiment config (INI)
//   --out DIR       output directory (default: output.directory from the config)
//   --grid-refine k multiply audit / trajectory grids by 2^k
// Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 I/O failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "tdform/tdform.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw tdform::IoError("cannot read " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-dependent form Hamiltonians: assumption audits and propagators"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int refine = 0;
  const std::pair<const char*, const char*> commands[] = {
      {"audit", "S1 / S2 / K2 regularity audit on a time grid"},
      {"propagate", "propagate an initial state and record the weak-equation residual"},
      {"converge", "Yosida and step-size convergence studies"},
      {"spectrum", "instantaneous spectrum by symmetry sector (circle model)"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--grid-refine", refine, "grid refinement levels (2^k)")->check(CLI::Range(0, 12));
  }
  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    const tdform::ExperimentConfig cfg = tdform::parse_config(slurp(config_path));
    const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(cfg.output.directory) : std::filesystem::path(out_dir);
    tdform::RunRecord rec;
    if (cmd == "audit") {
      const auto r = tdform::run_audit(cfg, out, refine);
      const auto& v = r.report.verdicts;
      std::cout << "C = " << tdform::format_double(r.report.s1.C) << "  S2 bound = "
                << tdform::format_double(r.report.s2.bound) << "  K2 " << (v.k2 ? "pass" : "fail") << "\n";
      rec = r.record;
    } else if (cmd == "propagate") {
      const auto r = tdform::run_propagation(cfg, out, refine);
      std::cout << "weak residual = " << tdform::format_double(r.residual.weak_residual)
                << "  norm drift = " << tdform::format_double(r.residual.norm_drift) << "\n";
      rec = r.record;
    } else if (cmd == "converge") {
      rec = tdform::run_convergence(cfg, out).record;
    } else {
      const auto r = tdform::run_spectrum(cfg, out, refine);
      std::cout << "min eigenvalue = " << tdform::format_double(r.min_eigenvalue) << "\n";
      rec = r.record;
    }
    for (const auto& f : rec.outputs) std::cout << (out / f).string() << "\n";
    return 0;
  } catch (const tdform::ConfigError& e) {
    for (const auto& m : e.errors()) std::cerr << "config error: " << m << "\n";
    return 1;
  } catch (const tdform::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}
