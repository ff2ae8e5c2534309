// cfmm: plan inspection, M2M accuracy sweeps, operation counts and FMM runs.
//
// Exit status: 0 success, 1 runtime failure, 2 bad command line, config or
// PDE file, 3 a --check expectation failed.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "cfmm/checks.hpp"
#include "cfmm/config.hpp"
#include "cfmm/csv.hpp"
#include "cfmm/experiments.hpp"
#include "cfmm/pde.hpp"

using namespace cfmm;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCheck = 3;

/// Output sink: a file when a path is given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int report(const std::vector<std::string>& failures, bool check) {
  if (!check) return 0;
  for (const auto& f : failures) std::cerr << "check failed: " << f << '\n';
  if (failures.empty()) std::cerr << "check passed\n";
  return failures.empty() ? 0 : kExitCheck;
}

std::string pick_output(const std::string& flag, const std::string& from_config) {
  return flag.empty() ? from_config : flag;
}

int cmd_plan(const std::string& file, int order) {
  PdeOperator pde = [&] {
    try {
      return load_pde(file);
    } catch (const ParseError& e) {
      throw ConfigError(file + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
  }();
  std::cout << run_plan_inspect(pde, order);
  return 0;
}

int cmd_m2m_accuracy(const std::string& config, const std::string& out, bool check) {
  const auto f = parse_m2m_accuracy_config(read_json_file(config));
  const auto rows = run_m2m_accuracy(f.config);
  Sink sink(pick_output(out, f.output));
  CsvWriter csv(sink.stream(), {"kernel", "p", "R", "eps_rel"});
  for (const auto& r : rows) csv.row({r.kernel, static_cast<long long>(r.p), r.R, r.eps_rel});
  return report(check_m2m_accuracy(rows, f.config.kernel.make().is_helmholtz()), check);
}

int cmd_m2m_kappa(const std::string& config, const std::string& out, bool check) {
  const auto f = parse_m2m_kappa_config(read_json_file(config));
  const auto rows = run_m2m_kappa(f.config);
  Sink sink(pick_output(out, f.output));
  CsvWriter csv(sink.stream(), {"kernel", "p", "kappa", "eps_rel", "eps_trunc"});
  for (const auto& r : rows) csv.row({r.kernel, static_cast<long long>(r.p), r.kappa, r.eps_rel, r.eps_trunc});
  return report(check_m2m_kappa(rows), check);
}

int cmd_opcount(const std::string& config, const std::string& out, bool check) {
  const auto f = parse_opcount_config(read_json_file(config));
  const auto rows = run_opcount(f.config);
  Sink sink(pick_output(out, f.output));
  CsvWriter csv(sink.stream(), {"kernel", "op", "p", "representation", "flops"});
  for (const auto& r : rows)
    csv.row({r.kernel, r.op, static_cast<long long>(r.p), r.representation, static_cast<long long>(r.flops)});
  return report(check_opcount(rows, f.config.kernel.make()), check);
}

int cmd_fmm_bench(FmmBenchConfig cfg, const std::string& mode, const std::string& out, bool check) {
  try {
    cfg.kernel.make();
    cfg.modes = mode == "both" ? std::vector{M2LMode::fft, M2LMode::direct} : std::vector{m2l_mode_from_name(mode)};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto rows = run_fmm_bench(cfg);
  Sink sink(out);
  CsvWriter csv(sink.stream(), {"N", "p", "depth", "mode", "max_rel_err", "l2_rel_err", "mode_diff", "wall_ms", "flops"});
  for (const auto& r : rows)
    csv.row({static_cast<long long>(r.n), static_cast<long long>(r.p), static_cast<long long>(r.depth),
             std::string(m2l_mode_name(r.mode)), r.max_rel_err, r.l2_rel_err, r.mode_diff, r.wall_ms,
             cfg.count_flops ? CsvField(static_cast<long long>(r.flops)) : CsvField(std::monostate{})});
  return report(check_fmm_bench(rows, cfg.kernel.make().dim()), check);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed Cartesian Taylor FMM toolkit"};
  app.require_subcommand(1);

  std::string pde_file;
  int order = 8;
  auto* plan = app.add_subcommand("plan", "Show the compression plan of a PDE at order p");
  plan->add_option("pde-file", pde_file, "PDE description file")->required();
  plan->add_option("--order,-p", order, "Expansion order")->required()->check(CLI::NonNegativeNumber);

  std::string config, output;
  bool check = false;
  auto add_config_command = [&](const std::string& name, const std::string& help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--config,-c", config, "JSON config file")->required();
    c->add_option("--output,-o", output, "CSV output path (overrides the config)");
    c->add_flag("--check", check, "Assert the expected behaviour; exit 3 on failure");
    return c;
  };
  auto* accuracy = add_config_command("m2m-accuracy", "Compressed vs uncompressed M2M error over R");
  auto* kappa = add_config_command("m2m-kappa", "Compressed M2M and truncation error over kappa");
  auto* opcount = add_config_command("opcount", "Counted flops per operator and order");

  FmmBenchConfig bench;
  std::string mode = "fft";
  auto* fmm = app.add_subcommand("fmm-bench", "Uniform-tree FMM on random points in the unit box");
  fmm->add_option("--kernel,-k", bench.kernel.name, "laplace2d, laplace3d, biharmonic2d, helmholtz2d, helmholtz3d")
      ->capture_default_str();
  fmm->add_option("--kappa", bench.kernel.kappa, "Helmholtz wavenumber");
  fmm->add_option("--order,-p", bench.order, "Expansion order")->capture_default_str()->check(CLI::NonNegativeNumber);
  fmm->add_option("--depth", bench.depth, "Tree depth (0: from N)")->capture_default_str()->check(CLI::NonNegativeNumber);
  fmm->add_option("--n,-n", bench.sizes, "Point counts")->delimiter(',')->capture_default_str();
  fmm->add_option("--seed", bench.seed, "RNG seed")->capture_default_str();
  fmm->add_option("--mode", mode, "M2L mode: fft, direct or both")->capture_default_str();
  fmm->add_option("--check-targets", bench.check_targets, "Targets compared with direct summation")
      ->capture_default_str();
  fmm->add_option("--scale-factor", bench.scale_factor, "M2L grid scale relative to p/r (0: default)")
      ->check(CLI::NonNegativeNumber);
  fmm->add_flag("--flops", bench.count_flops, "Also count flops (runs the FMM a second time)");
  fmm->add_option("--output,-o", output, "CSV output path");
  fmm->add_flag("--check", check, "Assert accuracy and scaling; exit 3 on failure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*plan) return cmd_plan(pde_file, order);
    if (*accuracy) return cmd_m2m_accuracy(config, output, check);
    if (*kappa) return cmd_m2m_kappa(config, output, check);
    if (*opcount) return cmd_opcount(config, output, check);
    if (*fmm) return cmd_fmm_bench(bench, mode, output, check);
  } catch (const ConfigError& e) {
    std::cerr << "cfmm: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "cfmm: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
