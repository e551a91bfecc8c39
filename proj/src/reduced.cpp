#include "mixlab/reduced.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace mixlab {
namespace {

constexpr double kHermitianTolerance = 1e-8;

// Columns b_x c_y psi for every (x, y), living in sector (n1-1, n2-1).
ComplexMatrix lowered_columns(const SectorState& s,
                              const std::vector<SparseComplex>& lower1,
                              const std::vector<SparseComplex>& lower2) {
  const int m = s.modes;
  const Eigen::Index d1 = static_cast<Eigen::Index>(sector_dimension(m, s.n1 - 1));
  const Eigen::Index d2 = static_cast<Eigen::Index>(sector_dimension(m, s.n2 - 1));
  ComplexMatrix cols(d1 * d2, static_cast<Eigen::Index>(m) * m);
  const auto c = s.matrix();
  for (int y = 0; y < m; ++y) {
    const ComplexMatrix cy = c * SparseComplex(lower2[y].transpose());  // dim1 x d2
    for (int x = 0; x < m; ++x) {
      const ComplexMatrix bxcy = lower1[x] * cy;  // d1 x d2
      cols.col(x + m * y) = Eigen::Map<const ComplexVector>(bxcy.data(), d1 * d2);
    }
  }
  return cols;
}

std::vector<SparseComplex> lowering_ops(int modes, int particles) {
  std::vector<SparseComplex> ops;
  ops.reserve(static_cast<std::size_t>(modes));
  for (int i = 0; i < modes; ++i)
    ops.emplace_back(annihilation_matrix(i, modes, particles).cast<Complex>());
  return ops;
}

// Unnormalized sum_{x,y,x',y'} <psi, b*_{x'} c*_{y'} b_x c_y psi> for one sector:
// with K the matrix of columns b_x c_y psi, gamma = (K^† K)^T.
ComplexMatrix sector_moment(const SectorState& s) {
  const auto cols =
      lowered_columns(s, lowering_ops(s.modes, s.n1), lowering_ops(s.modes, s.n2));
  return (cols.adjoint() * cols).transpose();
}

}  // namespace

Complex ReducedDensity::kernel(int x, int y, int xp, int yp, double cell_volume) const {
  return matrix(x + modes * y, xp + modes * yp) / (cell_volume * cell_volume);
}

ReducedDensity reduced_density_sector(const SectorState& state) {
  if (state.n1 < 1 || state.n2 < 1)
    throw ConfigError("reduced density needs at least one particle of each species");
  ReducedDensity out;
  out.modes = state.modes;
  out.normalization = static_cast<double>(state.n1) * state.n2;
  out.matrix = sector_moment(state) / (out.normalization * state.coefficients.squaredNorm());
  return out;
}

ReducedDensity reduced_density_fock(const TruncatedFockState& state) {
  const int m = state.modes();
  ReducedDensity out;
  out.modes = m;
  out.matrix = ComplexMatrix::Zero(static_cast<Eigen::Index>(m) * m, static_cast<Eigen::Index>(m) * m);
  double nn = 0.0;
  for (const auto& s : state.sectors()) {
    if (s.n1 < 1 || s.n2 < 1) continue;
    const double w = s.coefficients.squaredNorm();
    if (w == 0.0) continue;
    nn += w * s.n1 * s.n2;
    out.matrix += sector_moment(s);
  }
  if (!(nn > 0.0)) throw NumericalError("reduced density of a state with <N ⊗ N> = 0");
  out.normalization = nn / state.norm_squared();
  out.matrix /= nn;
  return out;
}

ReducedDensity hartree_projector(const ComplexVector& u, const ComplexVector& v,
                                 double cell_volume) {
  if (u.size() != v.size()) throw ConfigError("orbitals must have equal length");
  const double nu = cell_volume * u.squaredNorm();
  const double nv = cell_volume * v.squaredNorm();
  if (std::abs(nu - 1.0) > 1e-9 || std::abs(nv - 1.0) > 1e-9)
    throw ConfigError("Hartree projector needs normalized orbitals");
  const auto m = u.size();
  ComplexVector w(m * m);
  for (Eigen::Index y = 0; y < m; ++y)
    for (Eigen::Index x = 0; x < m; ++x) w[x + m * y] = cell_volume * u[x] * v[y];
  ReducedDensity out;
  out.modes = static_cast<int>(m);
  out.matrix = w * w.adjoint();
  return out;
}

double trace_norm_hermitian(const ComplexMatrix& difference) {
  if (difference.rows() != difference.cols()) throw ConfigError("trace norm of a non-square matrix");
  if (difference.size() == 0) return 0.0;
  const double asym = (difference - difference.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTolerance)
    throw NumericalError("trace distance of non-Hermitian operators (asymmetry " +
                         std::to_string(asym) + ")");
  const ComplexMatrix sym = 0.5 * (difference + difference.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const ReducedDensity& a, const ReducedDensity& b) {
  if (a.matrix.rows() != b.matrix.rows() || a.matrix.cols() != b.matrix.cols())
    throw ConfigError("reduced densities have different dimensions");
  return trace_norm_hermitian(a.matrix - b.matrix);
}

BoundBreakdown part1_bound_terms(const FluctuationMoments& moments, int reference_n1,
                                 int reference_n2) {
  constexpr double kSlack = 1e-10;
  if (moments.m10 < -kSlack || moments.m01 < -kSlack || moments.m11 < -kSlack)
    throw NumericalError("fluctuation moments must be nonnegative");
  if (reference_n1 < 1 || reference_n2 < 1)
    throw ConfigError("reference particle numbers must be positive");
  const double m10 = std::max(moments.m10, 0.0);
  const double m01 = std::max(moments.m01, 0.0);
  const double m11 = std::max(moments.m11, 0.0);
  const double n1 = reference_n1;
  const double n2 = reference_n2;
  const double s1 = std::sqrt(n1);
  const double s2 = std::sqrt(n2);

  BoundBreakdown b;
  b.t = moments.t;
  b.p = {2.0 / s1 * std::sqrt(m10),
         2.0 / s2 * std::sqrt(m01),
         2.0 / (s1 * s2) * std::sqrt(m11),
         2.0 / (s1 * s2) * std::sqrt(m10) * std::sqrt(m01),
         m10 / n1,
         m01 / n2,
         2.0 / (n1 * s2) * std::sqrt(m11) * std::sqrt(m10),
         2.0 / (s1 * n2) * std::sqrt(m11) * std::sqrt(m01),
         m11 / (n1 * n2)};
  for (double p : b.p) b.sum += p;
  return b;
}

}  // namespace mixlab
