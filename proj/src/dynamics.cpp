#include "mixlab/dynamics.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mixlab/parallel.hpp"

namespace mixlab {
namespace {

// Occupation numbers as a dim x M real matrix.
RealMatrix occupation_matrix(int modes, int particles) {
  const auto basis = shared_sector_basis(modes, particles);
  RealMatrix occ(static_cast<Eigen::Index>(basis->size()), modes);
  for (std::size_t s = 0; s < basis->size(); ++s) {
    const auto m = basis->occupation(s);
    for (int i = 0; i < modes; ++i) occ(static_cast<Eigen::Index>(s), i) = m[i];
  }
  return occ;
}

// psi <- Q exp(-i E dt) Q^T psi for real orthogonal Q.
void apply_spectral(const RealMatrix& q, const Eigen::VectorXd& energies, ComplexVector& psi,
                    double dt) {
  const Eigen::VectorXd re = q.transpose() * psi.real();
  const Eigen::VectorXd im = q.transpose() * psi.imag();
  ComplexVector coeffs(re.size());
  for (Eigen::Index k = 0; k < re.size(); ++k)
    coeffs[k] = Complex(re[k], im[k]) * std::polar(1.0, -energies[k] * dt);
  const Eigen::VectorXd out_re = q * coeffs.real();
  const Eigen::VectorXd out_im = q * coeffs.imag();
  for (Eigen::Index k = 0; k < psi.size(); ++k) psi[k] = Complex(out_re[k], out_im[k]);
}

}  // namespace

void PropagatorConfig::validate() const {
  if (krylov_dim < 4) throw ConfigError("Krylov subspace size must be at least 4");
  if (dense_threshold == 0) throw ConfigError("dense threshold must be positive");
  if (!(substep > 0.0)) throw ConfigError("propagator substep must be positive");
  if (!(krylov_tolerance > 0.0)) throw ConfigError("Krylov tolerance must be positive");
  if (max_retries < 1) throw ConfigError("retry limit must be positive");
}

std::string to_string(PropagatorConfig::Method method) {
  switch (method) {
    case PropagatorConfig::Method::automatic: return "auto";
    case PropagatorConfig::Method::dense_eig: return "dense_eig";
    case PropagatorConfig::Method::krylov: return "krylov";
  }
  return "unknown";
}

PropagatorConfig::Method propagator_method_from_string(const std::string& name) {
  if (name == "auto") return PropagatorConfig::Method::automatic;
  if (name == "dense_eig") return PropagatorConfig::Method::dense_eig;
  if (name == "krylov") return PropagatorConfig::Method::krylov;
  throw ConfigError("unknown propagator method '" + name + "'");
}

SparseReal species_hamiltonian(const RealMatrix& laplacian, const RealMatrix& potential,
                               int reference_n, int particles) {
  if (reference_n < 1) throw ConfigError("reference particle number must be positive");
  const int modes = static_cast<int>(laplacian.rows());
  const auto basis = shared_sector_basis(modes, particles);
  const double pair_scale = 0.5 / reference_n;

  std::vector<Eigen::Triplet<double>> entries;
  std::vector<int> occ(static_cast<std::size_t>(modes));
  for (std::size_t s = 0; s < basis->size(); ++s) {
    const auto m = basis->occupation(s);
    const int col = static_cast<int>(s);
    double diag = 0.0;
    for (int i = 0; i < modes; ++i) {
      if (m[i] == 0) continue;
      diag += laplacian(i, i) * m[i];
      // b_i^* b_j^* b_j b_i = n_i n_j - delta_ij n_i
      for (int j = 0; j < modes; ++j) diag += pair_scale * potential(i, j) * m[i] * m[j];
      diag -= pair_scale * potential(i, i) * m[i];
    }
    if (diag != 0.0) entries.emplace_back(col, col, diag);

    for (int j = 0; j < modes; ++j) {
      if (m[j] == 0) continue;
      for (int i = 0; i < modes; ++i) {
        if (i == j || laplacian(i, j) == 0.0) continue;
        std::copy(m.begin(), m.end(), occ.begin());
        const double amp = laplacian(i, j) * std::sqrt(static_cast<double>(occ[j]) * (occ[i] + 1));
        --occ[j];
        ++occ[i];
        entries.emplace_back(static_cast<int>(basis->index_of(occ)), col, amp);
      }
    }
  }
  const auto dim = static_cast<Eigen::Index>(basis->size());
  SparseReal h(dim, dim);
  h.setFromTriplets(entries.begin(), entries.end());
  return h;
}

SectorHamiltonian assemble_sector_hamiltonian(const LatticeModel& model, int reference_n1,
                                              int reference_n2, int n1, int n2,
                                              std::size_t max_dimension) {
  if (n1 < 0 || n2 < 0) throw ConfigError("sector particle numbers must be nonnegative");
  const int modes = model.sites();
  const auto d1 = sector_dimension(modes, n1);
  const auto d2 = sector_dimension(modes, n2);
  if (d1 * d2 > max_dimension)
    throw ConfigError("sector (" + std::to_string(n1) + ", " + std::to_string(n2) +
                      ") has dimension " + std::to_string(d1 * d2) + " above the limit " +
                      std::to_string(max_dimension));

  SectorHamiltonian h;
  h.n1 = n1;
  h.n2 = n2;
  h.reference_n1 = reference_n1;
  h.reference_n2 = reference_n2;
  h.model_fingerprint = model.fingerprint();
  h.species1 = species_hamiltonian(model.laplacian, model.v1, reference_n1, n1);
  h.species2 = species_hamiltonian(model.laplacian, model.v2, reference_n2, n2);
  const RealMatrix occ1 = occupation_matrix(modes, n1);
  const RealMatrix occ2 = occupation_matrix(modes, n2);
  h.cross = (occ1 * model.v12 * occ2.transpose()) / static_cast<double>(reference_n1 + reference_n2);
  return h;
}

void SectorHamiltonian::apply(const ComplexVector& in, ComplexVector& out) const {
  if (in.size() != dimension()) throw ConfigError("vector does not match sector dimension");
  out.resize(in.size());
  Eigen::Map<const ComplexMatrix> c(in.data(), dim1(), dim2());
  Eigen::Map<ComplexMatrix> r(out.data(), dim1(), dim2());
  // H is real: act on real and imaginary parts separately.
  const RealMatrix re = c.real();
  const RealMatrix im = c.imag();
  RealMatrix out_re = species1 * re;
  out_re += re * species2.transpose();
  out_re += cross.cwiseProduct(re);
  RealMatrix out_im = species1 * im;
  out_im += im * species2.transpose();
  out_im += cross.cwiseProduct(im);
  r.real() = out_re;
  r.imag() = out_im;
}

SparseReal SectorHamiltonian::matrix() const {
  const Eigen::Index a = dim1();
  const Eigen::Index b = dim2();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(species1.nonZeros() * b + species2.nonZeros() * a + a * b));
  for (Eigen::Index k = 0; k < species1.outerSize(); ++k)
    for (SparseReal::InnerIterator it(species1, k); it; ++it)
      for (Eigen::Index j = 0; j < b; ++j)
        entries.emplace_back(static_cast<int>(it.row() + a * j), static_cast<int>(it.col() + a * j),
                             it.value());
  for (Eigen::Index k = 0; k < species2.outerSize(); ++k)
    for (SparseReal::InnerIterator it(species2, k); it; ++it)
      for (Eigen::Index i = 0; i < a; ++i)
        entries.emplace_back(static_cast<int>(i + a * it.row()), static_cast<int>(i + a * it.col()),
                             it.value());
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index i = 0; i < a; ++i)
      if (cross(i, j) != 0.0)
        entries.emplace_back(static_cast<int>(i + a * j), static_cast<int>(i + a * j), cross(i, j));
  SparseReal h(a * b, a * b);
  h.setFromTriplets(entries.begin(), entries.end());
  return h;
}

double SectorHamiltonian::expectation(const ComplexVector& psi) const {
  ComplexVector hpsi;
  apply(psi, hpsi);
  return psi.dot(hpsi).real() / psi.squaredNorm();
}

SectorPropagator::SectorPropagator(SectorHamiltonian hamiltonian, const PropagatorConfig& config)
    : h_(std::move(hamiltonian)), config_(config) {
  config_.validate();
  const auto dim = static_cast<std::size_t>(h_.dimension());
  switch (config_.method) {
    case PropagatorConfig::Method::dense_eig: dense_ = true; break;
    case PropagatorConfig::Method::krylov: dense_ = false; break;
    case PropagatorConfig::Method::automatic: dense_ = dim <= config_.dense_threshold; break;
  }
  // Tiny sectors are exact and cheaper densely whatever the method.
  if (dim <= static_cast<std::size_t>(config_.krylov_dim)) dense_ = true;
  if (dense_) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig{RealMatrix(h_.matrix())};
    if (eig.info() != Eigen::Success)
      throw NumericalError("eigendecomposition failed for sector (" + std::to_string(h_.n1) +
                           ", " + std::to_string(h_.n2) + ")");
    energies_ = eig.eigenvalues();
    eigenvectors_ = eig.eigenvectors();
  }
}

void SectorPropagator::advance(ComplexVector& psi, double dt) const {
  if (psi.size() != h_.dimension()) throw ConfigError("state does not match sector dimension");
  if (dt < 0.0) throw ConfigError("propagation time must be nonnegative");
  if (dt == 0.0) return;
  if (dense_)
    apply_spectral(eigenvectors_, energies_, psi, dt);
  else
    advance_krylov(psi, dt);
  if (!psi.allFinite())
    throw NumericalError("propagation produced non-finite values in sector (" +
                         std::to_string(h_.n1) + ", " + std::to_string(h_.n2) + ")");
}

void SectorPropagator::advance_krylov(ComplexVector& psi, double dt) const {
  const Eigen::Index n = psi.size();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(config_.krylov_dim, n));
  double remaining = dt;
  double tau = std::min(config_.substep, dt);
  int retries = 0;

  ComplexMatrix basis(n, m_max);
  ComplexVector w(n);
  while (remaining > 0.0) {
    const double beta0 = psi.norm();
    if (beta0 == 0.0) return;
    basis.col(0) = psi / beta0;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_max);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(m_max);
    int m = m_max;
    bool invariant = false;
    for (int j = 0; j < m_max; ++j) {
      h_.apply(basis.col(j), w);
      alpha[j] = basis.col(j).dot(w).real();
      // Full reorthogonalization (twice is enough).
      for (int pass = 0; pass < 2; ++pass)
        w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).adjoint() * w);
      beta[j] = w.norm();
      const double scale = std::max(1.0, std::abs(alpha[j]));
      if (beta[j] <= 1e-13 * scale) {
        m = j + 1;
        invariant = true;
        break;
      }
      if (j + 1 < m_max) basis.col(j + 1) = w / beta[j];
    }

    RealMatrix t = RealMatrix::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      t(j, j) = alpha[j];
      if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(t);
    const RealMatrix& q = eig.eigenvectors();

    for (;;) {
      const double step = std::min(tau, remaining);
      ComplexVector y(m);
      for (int k = 0; k < m; ++k) y[k] = q(0, k) * std::polar(1.0, -eig.eigenvalues()[k] * step);
      const ComplexVector coeffs = q.cast<Complex>() * y;
      const double err = invariant ? 0.0 : beta[m - 1] * std::abs(coeffs[m - 1]);
      if (err <= config_.krylov_tolerance) {
        psi = beta0 * (basis.leftCols(m) * coeffs);
        remaining -= step;
        if (err < 1e-3 * config_.krylov_tolerance) tau = std::min(2.0 * tau, config_.substep * 64.0);
        break;
      }
      tau = 0.5 * step;
      if (++retries > config_.max_retries)
        throw NumericalError("Krylov propagation did not converge in sector (" +
                             std::to_string(h_.n1) + ", " + std::to_string(h_.n2) + ")");
    }
  }
}

SectorState propagate_sector(const SectorState& state, const SectorHamiltonian& hamiltonian,
                             double t, const PropagatorConfig& config) {
  if (state.n1 != hamiltonian.n1 || state.n2 != hamiltonian.n2)
    throw ConfigError("state and Hamiltonian belong to different sectors");
  SectorPropagator prop(hamiltonian, config);
  SectorState out = state;
  prop.advance(out.coefficients, t);
  out.t = state.t + t;
  return out;
}

FockPropagator::FockPropagator(const LatticeModel& model, int reference_n1, int reference_n2,
                               int cutoff1, int cutoff2, const PropagatorConfig& config,
                               int threads)
    : cutoff1_(cutoff1), cutoff2_(cutoff2), threads_(threads) {
  const std::size_t count = static_cast<std::size_t>((cutoff1 + 1) * (cutoff2 + 1));
  std::vector<std::optional<SectorPropagator>> built(count);
  parallel_for(count, threads, [&](std::size_t k) {
    const int n1 = static_cast<int>(k) / (cutoff2 + 1);
    const int n2 = static_cast<int>(k) % (cutoff2 + 1);
    built[k].emplace(assemble_sector_hamiltonian(model, reference_n1, reference_n2, n1, n2),
                     config);
  });
  sectors_.reserve(count);
  for (auto& p : built) sectors_.push_back(std::move(*p));
}

void FockPropagator::advance(TruncatedFockState& state, double dt) const {
  if (state.cutoff1() != cutoff1_ || state.cutoff2() != cutoff2_)
    throw ConfigError("state cutoffs do not match the propagator");
  auto sectors = state.sectors();
  parallel_for(sectors.size(), threads_, [&](std::size_t k) {
    try {
      sectors_[k].advance(sectors[k].coefficients, dt);
    } catch (const std::exception& e) {
      throw NumericalError("sector (" + std::to_string(sectors[k].n1) + ", " +
                           std::to_string(sectors[k].n2) + "): " + e.what());
    }
    sectors[k].t += dt;
  });
  state.t += dt;
}

TruncatedFockState propagate_coherent(const TruncatedFockState& state, const LatticeModel& model,
                                      int reference_n1, int reference_n2, double t,
                                      const PropagatorConfig& config, int threads) {
  FockPropagator prop(model, reference_n1, reference_n2, state.cutoff1(), state.cutoff2(),
                      config, threads);
  TruncatedFockState out = state;
  prop.advance(out, t);
  return out;
}

FluctuationMoments fluctuation_moments(const TruncatedFockState& state, const ComplexVector& u,
                                       const ComplexVector& v, int reference_n1, int reference_n2,
                                       double cell_volume) {
  const int modes = state.modes();
  if (u.size() != modes || v.size() != modes)
    throw ConfigError("orbitals do not match the Fock-space mode count");
  const double norm_u = cell_volume * u.squaredNorm();
  const double norm_v = cell_volume * v.squaredNorm();
  if (std::abs(norm_u - 1.0) > 1e-6 || std::abs(norm_v - 1.0) > 1e-6)
    throw NumericalError("fluctuation moments need normalized orbitals");
  const double norm = state.norm_squared();
  if (!(norm > 0.0)) throw NumericalError("fluctuation moments of a zero-norm state");

  const ComplexVector alpha = std::sqrt(reference_n1 * cell_volume) * u;
  const ComplexVector beta = std::sqrt(reference_n2 * cell_volume) * v;

  FluctuationMoments out;
  out.t = state.t;
  std::vector<TruncatedFockState> lowered2;
  lowered2.reserve(static_cast<std::size_t>(modes));
  for (int j = 0; j < modes; ++j) {
    lowered2.push_back(displaced_annihilate(state, 2, j, beta[j]));
    out.m01 += lowered2.back().norm_squared();
  }
  for (int i = 0; i < modes; ++i) {
    out.m10 += displaced_annihilate(state, 1, i, alpha[i]).norm_squared();
    for (int j = 0; j < modes; ++j)
      out.m11 += displaced_annihilate(lowered2[j], 1, i, alpha[i]).norm_squared();
  }
  out.m10 /= norm;
  out.m01 /= norm;
  out.m11 /= norm;
  return out;
}

}  // namespace mixlab
