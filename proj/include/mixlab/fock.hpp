#pragma once

// Truncated two-species bosonic Fock space over the lattice modes.
//
// Mode operators b_i, c_i obey [b_i, b_j^*] = delta_ij. Smeared operators use
// a^*(f) = sqrt(h^d) sum_i f_i a_i^*, so [a(f), a^*(g)] = <f, g> with the
// lattice-weighted inner product <f, g> = h^d sum_i conj(f_i) g_i.
//
// A two-species sector state (n1, n2) stores its coefficients column-major as a
// dim1 x dim2 matrix C(i1, i2): species-1 operators act as A * C, species-2
// operators as C * B^T.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "mixlab/model.hpp"

namespace mixlab {

using SparseReal = Eigen::SparseMatrix<double>;
using SparseComplex = Eigen::SparseMatrix<Complex>;

inline constexpr std::size_t kDefaultSectorLimit = 5'000'000;

/// C(n + M - 1, M - 1); throws ConfigError on 64-bit overflow.
std::uint64_t sector_dimension(int modes, int particles);

/// Occupation vectors (m_1..m_M), sum m_i = n, in descending lexicographic order.
class SectorBasis {
public:
  SectorBasis(int modes, int particles, std::size_t limit = kDefaultSectorLimit);

  int modes() const { return modes_; }
  int particles() const { return particles_; }
  std::size_t size() const { return size_; }

  std::span<const int> occupation(std::size_t index) const {
    return {occupations_.data() + index * static_cast<std::size_t>(modes_),
            static_cast<std::size_t>(modes_)};
  }

  /// Inverse of occupation(); O(M) combinatorial ranking.
  std::size_t index_of(std::span<const int> occupation) const;

private:
  int modes_;
  int particles_;
  std::size_t size_;
  std::vector<int> occupations_;
};

SectorBasis enumerate_sector_basis(int modes, int particles,
                                   std::size_t limit = kDefaultSectorLimit);

/// Process-wide cache of immutable bases; thread safe.
std::shared_ptr<const SectorBasis> shared_sector_basis(int modes, int particles);

/// a_i^* from sector n to sector n + 1; entries sqrt(m_i + 1).
SparseReal creation_matrix(int mode, int modes, int particles);
/// a_i from sector n to sector n - 1; entries sqrt(m_i). Rejects n = 0.
SparseReal annihilation_matrix(int mode, int modes, int particles);

enum class LadderKind { create, annihilate };

/// a^*(f) (n -> n+1) or a(f) (n -> n-1) on sector `particles`; f has one
/// entry per mode.
SparseComplex smeared_operator(const ComplexVector& f, LadderKind kind, int particles,
                               double cell_volume);

/// <f, g> = h^d sum conj(f_i) g_i.
Complex lattice_inner(const ComplexVector& f, const ComplexVector& g, double cell_volume);

struct CcrResiduals {
  double creation_commutator = 0.0;      // max_n ||[a(f), a^*(g)] - <f,g>||
  double annihilation_commutator = 0.0;  // max_n ||[a(f), a(g)]||
};

/// Operator-norm residuals of the canonical commutation relations on every
/// sector n <= n_max (each residual is the largest singular value of the
/// residual block, i.e. the worst case over all states of the sector).
CcrResiduals check_ccr(const ComplexVector& f, const ComplexVector& g, int n_max,
                       double cell_volume);

struct SectorState {
  int modes = 1;
  int n1 = 0;
  int n2 = 0;
  ComplexVector coefficients;
  double t = 0.0;

  Eigen::Index dim1() const;
  Eigen::Index dim2() const;
  Eigen::Map<ComplexMatrix> matrix();
  Eigen::Map<const ComplexMatrix> matrix() const;

  static SectorState zero(int modes, int n1, int n2);
};

/// u^{⊗n1} ⊗ v^{⊗n2} with unit-normalized orbitals (h^d ||u||^2 = 1).
SectorState product_sector_state(const ComplexVector& u, const ComplexVector& v, int n1, int n2,
                                 double cell_volume);

/// Single-species symmetric coefficients of f^{⊗n} / sqrt(n!) in the occupation basis
/// (no exp(-||f||^2/2) prefactor).
ComplexVector symmetric_power(const ComplexVector& f, int particles, double cell_volume);

class TruncatedFockState {
public:
  TruncatedFockState() = default;
  TruncatedFockState(int modes, int cutoff1, int cutoff2);

  int modes() const { return modes_; }
  int cutoff1() const { return cutoff1_; }
  int cutoff2() const { return cutoff2_; }

  SectorState& sector(int n1, int n2);
  const SectorState& sector(int n1, int n2) const;
  std::span<SectorState> sectors() { return sectors_; }
  std::span<const SectorState> sectors() const { return sectors_; }

  double norm_squared() const;
  /// 1 - ||state||^2 for states built from a normalized vector.
  double deficit() const { return 1.0 - norm_squared(); }

  bool deficit_flag = false;
  double t = 0.0;

private:
  int modes_ = 0;
  int cutoff1_ = 0;
  int cutoff2_ = 0;
  std::vector<SectorState> sectors_;
};

/// Truncated W(f) ⊗ W(g) applied to the vacuum; sector amplitudes are evaluated
/// in closed form. `deficit_flag` is set when 1 - norm^2 exceeds deficit_bound.
TruncatedFockState coherent_state(const ComplexVector& f, const ComplexVector& g, int cutoff1,
                                  int cutoff2, double cell_volume, double deficit_bound = 1e-8);

/// P(X > cutoff) for X ~ Poisson(mean).
double poisson_tail(double mean, int cutoff);
/// Analytic truncation deficit of a product coherent state.
double coherent_deficit(double mean1, double mean2, int cutoff1, int cutoff2);

enum class NumberObservable { species1, species2, product };

/// Expectation of N⊗I, I⊗N or N⊗N over the truncated state renormalized by its norm.
double number_expectation(const TruncatedFockState& state, NumberObservable which);

/// (a_i - alpha) on species 1 or 2 applied to a truncated state. The result
/// lives on the same cutoffs; the top sector of the lowered species only picks
/// up the -alpha term.
TruncatedFockState displaced_annihilate(const TruncatedFockState& state, int species, int mode,
                                        Complex alpha);

}  // namespace mixlab
