#pragma once

// Mean-field many-body Hamiltonian on fixed-number sectors and its time
// evolution.
//
// On sector (n1, n2), with reference particle numbers (N1, N2):
//   H = sum_ij T_ij b_i^* b_j + 1/(2 N1) sum_ij V1(i,j) b_i^* b_j^* b_j b_i
//     + (species 2 analogue with 1/(2 N2))
//     + 1/(N1 + N2) sum_ij V12(i,j) b_i^* c_j^* c_j b_i
// which equals the first-quantized pair sums restricted to the sector.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixlab/fock.hpp"
#include "mixlab/model.hpp"

namespace mixlab {

struct PropagatorConfig {
  enum class Method { automatic, dense_eig, krylov };

  Method method = Method::automatic;
  int krylov_dim = 30;
  /// Initial Krylov substep; shrunk automatically when the error estimate fails.
  double substep = 0.1;
  /// Sectors up to this dimension use a dense eigendecomposition under `automatic`.
  std::size_t dense_threshold = 2000;
  double krylov_tolerance = 1e-12;
  int max_retries = 40;

  void validate() const;
};

std::string to_string(PropagatorConfig::Method method);
PropagatorConfig::Method propagator_method_from_string(const std::string& name);

/// Single-species block: kinetic hopping plus intra-species pair interaction
/// scaled by 1/(2 N) on the n-particle occupation basis.
SparseReal species_hamiltonian(const RealMatrix& laplacian, const RealMatrix& potential,
                               int reference_n, int particles);

class SectorHamiltonian {
public:
  int n1 = 0;
  int n2 = 0;
  int reference_n1 = 1;
  int reference_n2 = 1;
  std::uint64_t model_fingerprint = 0;

  SparseReal species1;  // dim1 x dim1
  SparseReal species2;  // dim2 x dim2
  RealMatrix cross;     // dim1 x dim2 diagonal of the inter-species term

  Eigen::Index dim1() const { return species1.rows(); }
  Eigen::Index dim2() const { return species2.rows(); }
  Eigen::Index dimension() const { return dim1() * dim2(); }

  /// out = H in, without materializing H.
  void apply(const ComplexVector& in, ComplexVector& out) const;
  /// Kronecker sum I ⊗ H1 + H2 ⊗ I + diag(cross) in the column-major product basis.
  SparseReal matrix() const;
  double expectation(const ComplexVector& psi) const;
};

SectorHamiltonian assemble_sector_hamiltonian(const LatticeModel& model, int reference_n1,
                                              int reference_n2, int n1, int n2,
                                              std::size_t max_dimension = kDefaultSectorLimit);

/// exp(-i H t) on one sector; dense eigendecomposition or substepped Lanczos.
class SectorPropagator {
public:
  SectorPropagator(SectorHamiltonian hamiltonian, const PropagatorConfig& config);

  void advance(ComplexVector& psi, double dt) const;
  const SectorHamiltonian& hamiltonian() const { return h_; }
  bool uses_dense() const { return dense_; }

private:
  void advance_krylov(ComplexVector& psi, double dt) const;

  SectorHamiltonian h_;
  PropagatorConfig config_;
  bool dense_ = false;
  Eigen::VectorXd energies_;
  RealMatrix eigenvectors_;
};

SectorState propagate_sector(const SectorState& state, const SectorHamiltonian& hamiltonian,
                             double t, const PropagatorConfig& config);

/// Propagates every sector of a truncated state with Hamiltonians built from the
/// same reference (N1, N2). Sectors are independent and run on `threads` workers.
class FockPropagator {
public:
  FockPropagator(const LatticeModel& model, int reference_n1, int reference_n2, int cutoff1,
                 int cutoff2, const PropagatorConfig& config, int threads = 1);

  void advance(TruncatedFockState& state, double dt) const;

private:
  int cutoff1_;
  int cutoff2_;
  int threads_;
  std::vector<SectorPropagator> sectors_;
};

TruncatedFockState propagate_coherent(const TruncatedFockState& state, const LatticeModel& model,
                                      int reference_n1, int reference_n2, double t,
                                      const PropagatorConfig& config, int threads = 1);

struct FluctuationMoments {
  double t = 0.0;
  double m10 = 0.0;  // <N ⊗ I> in the fluctuation frame
  double m01 = 0.0;  // <I ⊗ N>
  double m11 = 0.0;  // <N ⊗ N>
};

/// Number moments of omega_t = W(sqrt(N1) u_t, sqrt(N2) v_t)^* psi_t, computed as
/// norms of (b_i - sqrt(N1) u_t,i) psi_t etc. without forming omega_t. The
/// state is renormalized by its truncated norm.
FluctuationMoments fluctuation_moments(const TruncatedFockState& state, const ComplexVector& u,
                                       const ComplexVector& v, int reference_n1, int reference_n2,
                                       double cell_volume);

}  // namespace mixlab
