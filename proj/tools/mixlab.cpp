#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mixlab/harness.hpp"
#include "mixlab/hartree.hpp"

namespace {

using namespace mixlab;

enum ExitCode { ok = 0, config_invalid = 2, numerical_failure = 3, io_failure = 4 };

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool quiet = false;
};

RunConfig load(const Options& o) {
  RunConfig c = load_config(o.config);
  if (o.out) c.output_directory = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  return c;
}

void print_summary(const std::vector<ConvergenceRecord>& records,
                   const std::vector<std::string>& skipped, const std::vector<RateFit>& fits) {
  for (const auto& r : records)
    std::cout << to_string(r.pipeline) << " N=(" << r.n1 << ", " << r.n2 << ") t=" << r.t
              << " distance=" << r.trace_distance << " p_sum=" << r.p_sum << '\n';
  for (const auto& s : skipped) std::cout << "skipped: " << s << '\n';
  for (const auto& f : fits) {
    std::cout << "fit " << to_string(f.pipeline) << " t=" << f.t << ": ";
    if (f.valid)
      std::cout << "slope " << f.slope << " residual " << f.residual << '\n';
    else
      std::cout << f.reason << '\n';
  }
}

int run_hartree(const Options& o) {
  const RunConfig c = load(o);
  const LatticeModel model = build_model(c);
  const auto [u, v] = initial_orbitals(c);
  const auto traj = evolve({u, v, 0.0}, model, c.couplings, c.time.t_final, c.time.dt,
                           c.time.stride);
  const std::filesystem::path dir(c.output_directory);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::ios_base::failure("cannot create directory " + dir.string());
  const auto csv = dir / "trajectory.csv";
  std::ofstream out(csv, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + csv.string());
  write_trajectory_csv(traj, out);
  out.close();
  if (!out) throw std::ios_base::failure("write failed for " + csv.string());
  if (c.write_snapshots) write_trajectory_snapshots(traj, (dir / "trajectory.c64").string());
  if (!o.quiet) {
    const auto& a = traj.front();
    const auto& b = traj.back();
    std::cout << "hartree: " << traj.samples.size() << " samples to t=" << b.t
              << ", mass drift " << std::max(std::abs(b.mass1 - a.mass1), std::abs(b.mass2 - a.mass2))
              << ", energy drift " << std::abs(b.energy - a.energy) << '\n'
              << "wrote " << csv.string() << '\n';
  }
  return ok;
}

int run_experiments(const Options& o, bool exact, bool coherent) {
  const RunConfig c = load(o);
  ExperimentResult all;
  auto append = [&all](ExperimentResult r) {
    all.records.insert(all.records.end(), r.records.begin(), r.records.end());
    all.skipped.insert(all.skipped.end(), r.skipped.begin(), r.skipped.end());
  };
  if (exact) append(run_fixed_sector_experiment(c));
  if (coherent) append(run_coherent_experiment(c));
  sort_records(all.records);
  const auto times = c.sample_times();
  const auto fits = fit_rates(all.records, times);
  emit_report(all.records, fits, c, all.skipped, c.output_directory);
  if (!o.quiet) {
    print_summary(all.records, all.skipped, fits);
    std::cout << "wrote " << c.output_directory << '\n';
  }
  return ok;
}

int run_validate(const Options& o) {
  const RunConfig c = load(o);
  if (!o.quiet) std::cout << "config ok: " << c.pairs.size() << " particle-number pairs\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-species mean-field convergence experiments", "mixlab"};
  app.set_version_flag("--version", MIXLAB_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config, "JSON run configuration")->required();
  app.add_option("--out", o.out, "Output directory (overrides output.directory)");
  app.add_option("--seed", o.seed, "Seed for orbital noise (overrides seed)");
  app.add_option("--threads", o.threads, "Worker threads (overrides threads)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", o.quiet, "Suppress progress output");

  auto* hartree = app.add_subcommand("hartree", "Integrate the Hartree system, write trajectory.csv");
  auto* exact = app.add_subcommand("exact", "Fixed-number many-body runs and report");
  auto* coherent = app.add_subcommand("coherent", "Coherent-state many-body runs and report");
  auto* converge = app.add_subcommand("converge", "Both pipelines selected in the config, fits and report");
  auto* validate = app.add_subcommand("validate", "Check a configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_invalid;
  }

  try {
    if (*hartree) return run_hartree(o);
    if (*exact) return run_experiments(o, true, false);
    if (*coherent) return run_experiments(o, false, true);
    if (*converge) {
      const RunConfig c = load(o);
      return run_experiments(o, c.run_exact, c.run_coherent);
    }
    if (*validate) return run_validate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_invalid;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O failure: " << e.what() << '\n';
    return io_failure;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O failure: " << e.what() << '\n';
    return io_failure;
  }
  return config_invalid;
}
