#pragma once

// Lattice one-body space, pair potentials and coupling constants shared by
// every other part of the library.

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mixlab {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Invalid configuration or precondition on user input.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A particle-number sequence violating the mean-field ratio condition.
class SequenceRejected : public ConfigError {
public:
  using ConfigError::ConfigError;
};

/// Non-finite values, failed convergence, broken invariants at run time.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Periodic hypercubic lattice with `sites_per_axis^dimension` sites.
struct LatticeGeometry {
  int dimension = 1;
  int sites_per_axis = 4;
  double spacing = 1.0;

  int total_sites() const;
  /// h^d, the weight of one lattice cell in integrals.
  double cell_volume() const;
  /// Integer coordinates of site `index` (axis 0 varies fastest).
  std::array<int, 3> coordinates(int index) const;
  /// Minimal-image Euclidean distance between two sites, in length units.
  double distance(int i, int j) const;
  void validate() const;
};

enum class PotentialKind { zero, gaussian, soft_coulomb, yukawa, contact };

std::string to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(const std::string& name);

struct PotentialSpec {
  PotentialKind kind = PotentialKind::zero;
  double strength = 0.0;
  /// Gaussian/Yukawa range or soft-Coulomb softening length.
  double range = 1.0;

  void validate() const;
};

struct CouplingConstants {
  double c1 = 0.5;
  double c2 = 0.5;

  /// Throws ConfigError unless c1, c2 >= 0 and c1 + c2 == 1 to working precision.
  void validate() const;
};

/// Discretized one-body space: kinetic operator and sampled pair potentials.
/// Immutable once built.
struct LatticeModel {
  LatticeGeometry geometry;
  RealMatrix laplacian;  // -Delta, positive semidefinite
  RealMatrix v1;
  RealMatrix v2;
  RealMatrix v12;

  int sites() const { return geometry.total_sites(); }
  double cell_volume() const { return geometry.cell_volume(); }

  /// Builds the model. A single-site lattice (sites_per_axis == 1) is a single
  /// mode with zero kinetic energy.
  static LatticeModel build(const LatticeGeometry& geometry, const PotentialSpec& v1,
                            const PotentialSpec& v2, const PotentialSpec& v12);

  /// Model with explicit matrices, used for single-mode setups and tests.
  static LatticeModel from_matrices(const LatticeGeometry& geometry, RealMatrix laplacian,
                                    RealMatrix v1, RealMatrix v2, RealMatrix v12);

  /// Stable content hash of all matrices (FNV-1a over the raw doubles).
  std::uint64_t fingerprint() const;
};

/// Nearest-neighbour periodic -Delta; d-dimensional operator is the Kronecker
/// sum of 1D stencils. Requires L >= 2 and h > 0.
RealMatrix build_laplacian(int dimension, int sites_per_axis, double spacing);

/// Entry (i, j) = V(minimal-image distance between sites i and j).
RealMatrix sample_potential(const PotentialSpec& spec, const LatticeGeometry& geometry);

/// Radial profile V(r) of a potential; `spacing` and `dimension` enter the
/// Yukawa regularization and the contact normalization.
double potential_value(const PotentialSpec& spec, double r, double spacing, int dimension);

struct ParticlePair {
  int n1 = 1;
  int n2 = 1;
  friend bool operator==(const ParticlePair&, const ParticlePair&) = default;
};

struct SequenceReport {
  /// max_k |N1/(N1+N2) - c1| and max_k |N2/(N1+N2) - c2|.
  double max_deviation1 = 0.0;
  double max_deviation2 = 0.0;
  /// Maxima over pairs of (N1+N2)/N1, (N1+N2)/N2, N1/N2, N2/N1, sqrt(N1 N2)/(N1+N2).
  std::array<double, 5> ratio_bounds{};
};

/// Checks |N1/(N1+N2) - c1| <= D/N2 and |N2/(N1+N2) - c2| <= D/N1 for every
/// pair. Throws SequenceRejected naming every offending pair.
SequenceReport validate_sequences(std::span<const ParticlePair> pairs,
                                  const CouplingConstants& couplings, double tolerance_d);

}  // namespace mixlab
