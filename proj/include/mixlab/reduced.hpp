#pragma once

// The (1,1)-reduced density operator of a two-species state and its distance
// to the product projector |u ⊗ v><u ⊗ v|.
//
// Matrices are stored in the orthonormal mode basis, indexed by the site pair
// (x, y) as x + M*y. The pointwise lattice kernel is matrix / h^{2d}, so the
// lattice-weighted trace h^{2d} sum_xy kernel(x,y;x,y) equals the plain trace.

#include <array>

#include "mixlab/dynamics.hpp"
#include "mixlab/fock.hpp"

namespace mixlab {

struct ReducedDensity {
  int modes = 0;
  ComplexMatrix matrix;  // M^2 x M^2, entry ((x,y),(x',y'))
  /// The divisor actually used: n1*n2 for a sector, the truncated <N ⊗ N> for Fock states.
  double normalization = 1.0;

  /// gamma(x, y; x', y') as a lattice kernel.
  Complex kernel(int x, int y, int xp, int yp, double cell_volume) const;
  double trace() const { return matrix.trace().real(); }
};

/// kernel = <psi, b*_{x'} c*_{y'} b_x c_y psi> / (n1 n2) on a single sector.
ReducedDensity reduced_density_sector(const SectorState& state);

/// Same kernel summed over all sectors and divided by the truncated <N ⊗ N>.
ReducedDensity reduced_density_fock(const TruncatedFockState& state);

/// |u ⊗ v><u ⊗ v| for lattice-normalized u, v.
ReducedDensity hartree_projector(const ComplexVector& u, const ComplexVector& v,
                                 double cell_volume);

/// Trace norm of A - B from the eigenvalues of the Hermitian difference.
double trace_distance(const ReducedDensity& a, const ReducedDensity& b);
double trace_norm_hermitian(const ComplexMatrix& difference);

struct BoundBreakdown {
  double t = 0.0;
  std::array<double, 9> p{};
  double sum = 0.0;
  double trace_distance = 0.0;
};

/// The nine fluctuation bound terms p1..p9 for the trace distance.
BoundBreakdown part1_bound_terms(const FluctuationMoments& moments, int reference_n1,
                                 int reference_n2);

}  // namespace mixlab
