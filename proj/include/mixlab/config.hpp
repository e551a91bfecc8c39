#pragma once

// Run configuration shared by the CLI, the Python module and the tests.
// Stored as JSON; key names are documented in docs/config.md.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mixlab/dynamics.hpp"
#include "mixlab/model.hpp"

namespace mixlab {

struct OrbitalSpec {
  double center = 0.0;
  double width = 1.0;
  int wavenumber = 0;
};

struct TimeGrid {
  double t_final = 0.5;
  double dt = 1e-3;
  int stride = 100;
  /// Times at which many-body quantities are sampled; t_final when empty.
  std::vector<double> samples{0.25, 0.5};
};

struct CoherentSettings {
  /// Mean particle numbers; the sequence pairs when empty.
  std::vector<ParticlePair> mean_numbers;
  /// Explicit Fock cutoffs; 0 selects N + ceil(4 sqrt(N) + 4).
  int cutoff1 = 0;
  int cutoff2 = 0;
  double deficit_bound = 1e-6;
};

struct RunConfig {
  LatticeGeometry lattice;
  PotentialSpec v1;
  PotentialSpec v2;
  PotentialSpec v12;
  CouplingConstants couplings;
  std::vector<ParticlePair> pairs{{2, 2}, {4, 4}};
  double tolerance_d = 1.0;
  OrbitalSpec orbital_u;
  OrbitalSpec orbital_v;
  /// Amplitude of seeded random perturbations added to both orbitals.
  double orbital_noise = 0.0;
  TimeGrid time;
  CoherentSettings coherent;
  PropagatorConfig propagator;
  std::size_t max_sector_dimension = 200'000;
  bool run_exact = true;
  bool run_coherent = true;
  std::string output_directory = "out";
  bool write_snapshots = false;
  std::uint64_t seed = 0;
  int threads = 1;

  /// Structural checks plus validate_sequences on the pairs.
  void validate() const;
  /// Sample times actually used (the configured samples or {t_final}).
  std::vector<double> sample_times() const;
};

/// Default cutoff for a coherent state with mean particle number n.
int default_cutoff(int n);

RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

LatticeModel build_model(const RunConfig& config);
/// Initial orbitals (u, v), normalized; includes the seeded perturbation.
std::pair<ComplexVector, ComplexVector> initial_orbitals(const RunConfig& config);

}  // namespace mixlab
