#pragma once

// Independent reference computations for the test suites. These work in the
// first-quantized tuple basis (one lattice site per particle) and never touch
// the ladder-operator code they are used to check.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mixlab/fock.hpp"
#include "mixlab/model.hpp"

namespace mixlab::oracle {

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(20240601);
  return engine;
}

inline double uniform(double lo = -1.0, double hi = 1.0) {
  return lo + (hi - lo) * static_cast<double>(rng()() >> 11) * 0x1.0p-53;
}

inline ComplexVector random_vector(Eigen::Index n) {
  ComplexVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(uniform(), uniform());
  return v;
}

inline ComplexVector random_unit_vector(Eigen::Index n) {
  ComplexVector v = random_vector(n);
  return v / v.norm();
}

inline double factorial(int n) { return std::tgamma(n + 1.0); }

/// All tuples (x_1..x_n) in [0, M)^n, x_1 varying fastest.
inline std::vector<std::vector<int>> tuples(int modes, int n) {
  std::vector<std::vector<int>> out;
  long count = 1;
  for (int k = 0; k < n; ++k) count *= modes;
  for (long idx = 0; idx < count; ++idx) {
    std::vector<int> t(static_cast<std::size_t>(n));
    long r = idx;
    for (int k = 0; k < n; ++k) {
      t[k] = static_cast<int>(r % modes);
      r /= modes;
    }
    out.push_back(t);
  }
  return out;
}

inline std::vector<int> occupation_of(const std::vector<int>& tuple, int modes) {
  std::vector<int> occ(static_cast<std::size_t>(modes), 0);
  for (int x : tuple) ++occ[x];
  return occ;
}

/// Map occupation vector -> symmetric-state index, built by brute enumeration.
inline std::map<std::vector<int>, int> occupation_index(int modes, int n) {
  std::map<std::vector<int>, int> index;
  const SectorBasis basis(modes, n);
  for (std::size_t s = 0; s < basis.size(); ++s) {
    const auto o = basis.occupation(s);
    index[std::vector<int>(o.begin(), o.end())] = static_cast<int>(s);
  }
  return index;
}

/// Symmetrizer: columns are normalized symmetric states expressed in the
/// tuple basis; |m> = sqrt(prod m_i! / n!) sum_{tuples with occupation m} |tuple>.
inline RealMatrix symmetrizer(int modes, int n) {
  const auto all = tuples(modes, n);
  const auto index = occupation_index(modes, n);
  RealMatrix s = RealMatrix::Zero(static_cast<Eigen::Index>(all.size()),
                                  static_cast<Eigen::Index>(index.size()));
  for (std::size_t k = 0; k < all.size(); ++k) {
    const auto occ = occupation_of(all[k], modes);
    double w = 1.0;
    for (int m : occ) w *= factorial(m);
    s(static_cast<Eigen::Index>(k), index.at(occ)) = std::sqrt(w / factorial(n));
  }
  return s;
}

/// First-quantized wavefunction Psi(x_1..x_n1; y_1..y_n2) of a sector state,
/// as an (M^n1) x (M^n2) matrix.
inline ComplexMatrix first_quantized(const SectorState& state) {
  const RealMatrix s1 = symmetrizer(state.modes, state.n1);
  const RealMatrix s2 = symmetrizer(state.modes, state.n2);
  return s1.cast<Complex>() * state.matrix() * s2.transpose().cast<Complex>();
}

/// gamma((x,y),(x',y')) = sum_rest Psi(x,rest;y,rest') conj(Psi(x',rest;y',rest')).
inline ComplexMatrix brute_force_partial_trace(const SectorState& state) {
  const int m = state.modes;
  const ComplexMatrix psi = first_quantized(state);
  const long rest1 = psi.rows() / m;
  const long rest2 = psi.cols() / m;
  ComplexMatrix gamma = ComplexMatrix::Zero(m * m, m * m);
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y)
      for (int xp = 0; xp < m; ++xp)
        for (int yp = 0; yp < m; ++yp) {
          Complex acc = 0.0;
          for (long r1 = 0; r1 < rest1; ++r1)
            for (long r2 = 0; r2 < rest2; ++r2)
              acc += psi(x + m * r1, y + m * r2) * std::conj(psi(xp + m * r1, yp + m * r2));
          gamma(x + m * y, xp + m * yp) = acc;
        }
  return gamma / psi.squaredNorm();
}

/// First-quantized mean-field Hamiltonian on the full tuple space, projected
/// onto the symmetric sector basis (same column-major product ordering as
/// SectorState).
inline RealMatrix first_quantized_hamiltonian(const LatticeModel& model, int ref1, int ref2,
                                              int n1, int n2) {
  const int m = model.sites();
  const auto t1 = tuples(m, n1);
  const auto t2 = tuples(m, n2);
  const long d1 = static_cast<long>(t1.size());
  const long d2 = static_cast<long>(t2.size());
  RealMatrix h = RealMatrix::Zero(d1 * d2, d1 * d2);
  for (long a2 = 0; a2 < d2; ++a2)
    for (long a1 = 0; a1 < d1; ++a1) {
      const long row = a1 + d1 * a2;
      const auto& xs = t1[a1];
      const auto& ys = t2[a2];
      double pot = 0.0;
      for (int j = 0; j < n1; ++j)
        for (int k = j + 1; k < n1; ++k) pot += model.v1(xs[j], xs[k]) / ref1;
      for (int j = 0; j < n2; ++j)
        for (int k = j + 1; k < n2; ++k) pot += model.v2(ys[j], ys[k]) / ref2;
      for (int j = 0; j < n1; ++j)
        for (int k = 0; k < n2; ++k) pot += model.v12(xs[j], ys[k]) / (ref1 + ref2);
      h(row, row) += pot;
      // One-body kinetic term on each particle.
      for (int j = 0; j < n1; ++j)
        for (int x = 0; x < m; ++x) {
          auto moved = xs;
          moved[j] = x;
          long b1 = 0;
          for (int k = n1 - 1; k >= 0; --k) b1 = b1 * m + moved[k];
          h(b1 + d1 * a2, row) += model.laplacian(x, xs[j]);
        }
      for (int j = 0; j < n2; ++j)
        for (int y = 0; y < m; ++y) {
          auto moved = ys;
          moved[j] = y;
          long b2 = 0;
          for (int k = n2 - 1; k >= 0; --k) b2 = b2 * m + moved[k];
          h(a1 + d1 * b2, row) += model.laplacian(y, ys[j]);
        }
    }
  const RealMatrix s1 = symmetrizer(m, n1);
  const RealMatrix s2 = symmetrizer(m, n2);
  // Kronecker product S2 ⊗ S1 matches the column-major (species-1 fastest) layout.
  RealMatrix s(s1.rows() * s2.rows(), s1.cols() * s2.cols());
  for (Eigen::Index i = 0; i < s2.rows(); ++i)
    for (Eigen::Index j = 0; j < s2.cols(); ++j)
      s.block(i * s1.rows(), j * s1.cols(), s1.rows(), s1.cols()) = s2(i, j) * s1;
  return s.transpose() * h * s;
}

/// Sum of singular values.
inline double svd_trace_norm(const ComplexMatrix& a) {
  Eigen::JacobiSVD<ComplexMatrix> svd(a);
  return svd.singularValues().sum();
}

/// Direct reimplementation of the particle-number ratio condition.
inline bool ratio_condition_holds(int n1, int n2, double c1, double c2, double d) {
  const double total = static_cast<double>(n1) + n2;
  return std::abs(n1 / total - c1) <= d / n2 && std::abs(n2 / total - c2) <= d / n1;
}

/// Poisson probability mass e^{-mean} mean^n / n!.
inline double poisson_pmf(double mean, int n) {
  return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
}

}  // namespace mixlab::oracle
