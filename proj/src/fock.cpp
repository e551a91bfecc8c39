#include "mixlab/fock.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Dense>

namespace mixlab {
namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > std::numeric_limits<std::uint64_t>::max())
      throw ConfigError("binomial coefficient overflows 64 bits");
  }
  return static_cast<std::uint64_t>(c);
}

void fill_occupations(std::vector<int>& out, std::vector<int>& current, int pos, int remaining) {
  const int modes = static_cast<int>(current.size());
  if (pos == modes - 1) {
    current[pos] = remaining;
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int m = remaining; m >= 0; --m) {
    current[pos] = m;
    fill_occupations(out, current, pos + 1, remaining - m);
  }
}

double largest_singular_value(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

void check_mode(int mode, int modes) {
  if (mode < 0 || mode >= modes)
    throw ConfigError("mode index " + std::to_string(mode) + " out of range [0, " +
                      std::to_string(modes) + ")");
}

// log(n!) via lgamma; exact enough for amplitudes well beyond the cutoffs used here.
double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

}  // namespace

std::uint64_t sector_dimension(int modes, int particles) {
  if (modes < 1) throw ConfigError("mode count must be positive");
  if (particles < 0) throw ConfigError("particle number must be nonnegative");
  return binomial(static_cast<std::uint64_t>(particles) + modes - 1,
                  static_cast<std::uint64_t>(modes) - 1);
}

SectorBasis::SectorBasis(int modes, int particles, std::size_t limit)
    : modes_(modes), particles_(particles) {
  const auto dim = sector_dimension(modes, particles);
  if (dim > limit)
    throw ConfigError("sector with " + std::to_string(modes) + " modes and " +
                      std::to_string(particles) + " particles has dimension " +
                      std::to_string(dim) + " above the limit " + std::to_string(limit));
  size_ = static_cast<std::size_t>(dim);
  occupations_.reserve(size_ * static_cast<std::size_t>(modes));
  std::vector<int> current(static_cast<std::size_t>(modes), 0);
  fill_occupations(occupations_, current, 0, particles);
}

std::size_t SectorBasis::index_of(std::span<const int> occupation) const {
  if (static_cast<int>(occupation.size()) != modes_)
    throw ConfigError("occupation vector has the wrong number of modes");
  // Count the vectors that are lexicographically larger: at each position,
  // those with a larger entry and the same prefix (hockey-stick identity).
  std::uint64_t index = 0;
  int remaining = particles_;
  for (int pos = 0; pos + 1 < modes_; ++pos) {
    const int m = occupation[pos];
    const int tail_modes = modes_ - pos - 1;
    if (remaining - m >= 1)
      index += binomial(static_cast<std::uint64_t>(remaining - m - 1 + tail_modes),
                        static_cast<std::uint64_t>(tail_modes));
    remaining -= m;
  }
  return static_cast<std::size_t>(index);
}

SectorBasis enumerate_sector_basis(int modes, int particles, std::size_t limit) {
  return SectorBasis(modes, particles, limit);
}

std::shared_ptr<const SectorBasis> shared_sector_basis(int modes, int particles) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const SectorBasis>> cache;
  const std::lock_guard lock(mutex);
  auto& slot = cache[{modes, particles}];
  if (!slot) slot = std::make_shared<const SectorBasis>(modes, particles);
  return slot;
}

SparseReal creation_matrix(int mode, int modes, int particles) {
  check_mode(mode, modes);
  const auto from = shared_sector_basis(modes, particles);
  const auto to = shared_sector_basis(modes, particles + 1);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(from->size());
  std::vector<int> occ(static_cast<std::size_t>(modes));
  for (std::size_t s = 0; s < from->size(); ++s) {
    const auto m = from->occupation(s);
    std::copy(m.begin(), m.end(), occ.begin());
    const double amp = std::sqrt(static_cast<double>(occ[mode] + 1));
    ++occ[mode];
    entries.emplace_back(static_cast<int>(to->index_of(occ)), static_cast<int>(s), amp);
  }
  SparseReal op(static_cast<Eigen::Index>(to->size()), static_cast<Eigen::Index>(from->size()));
  op.setFromTriplets(entries.begin(), entries.end());
  return op;
}

SparseReal annihilation_matrix(int mode, int modes, int particles) {
  check_mode(mode, modes);
  if (particles < 1)
    throw ConfigError("annihilation on the vacuum sector is the zero map; handle n = 0 explicitly");
  const auto from = shared_sector_basis(modes, particles);
  const auto to = shared_sector_basis(modes, particles - 1);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(from->size());
  std::vector<int> occ(static_cast<std::size_t>(modes));
  for (std::size_t s = 0; s < from->size(); ++s) {
    const auto m = from->occupation(s);
    if (m[mode] == 0) continue;
    std::copy(m.begin(), m.end(), occ.begin());
    const double amp = std::sqrt(static_cast<double>(occ[mode]));
    --occ[mode];
    entries.emplace_back(static_cast<int>(to->index_of(occ)), static_cast<int>(s), amp);
  }
  SparseReal op(static_cast<Eigen::Index>(to->size()), static_cast<Eigen::Index>(from->size()));
  op.setFromTriplets(entries.begin(), entries.end());
  return op;
}

SparseComplex smeared_operator(const ComplexVector& f, LadderKind kind, int particles,
                               double cell_volume) {
  const int modes = static_cast<int>(f.size());
  if (modes < 1) throw ConfigError("smearing function is empty");
  const double scale = std::sqrt(cell_volume);
  SparseComplex op;
  for (int i = 0; i < modes; ++i) {
    const SparseComplex mode_op = kind == LadderKind::create
                                      ? SparseComplex(creation_matrix(i, modes, particles).cast<Complex>())
                                      : SparseComplex(annihilation_matrix(i, modes, particles).cast<Complex>());
    const Complex weight = scale * (kind == LadderKind::create ? f[i] : std::conj(f[i]));
    if (i == 0)
      op = weight * mode_op;
    else
      op += weight * mode_op;
  }
  return op;
}

Complex lattice_inner(const ComplexVector& f, const ComplexVector& g, double cell_volume) {
  if (f.size() != g.size()) throw ConfigError("inner product of vectors with different lengths");
  return cell_volume * f.dot(g);
}

CcrResiduals check_ccr(const ComplexVector& f, const ComplexVector& g, int n_max,
                       double cell_volume) {
  if (f.size() != g.size()) throw ConfigError("f and g must have the same number of modes");
  const Complex fg = lattice_inner(f, g, cell_volume);
  CcrResiduals res;
  for (int n = 0; n <= n_max; ++n) {
    const Eigen::Index dim =
        static_cast<Eigen::Index>(sector_dimension(static_cast<int>(f.size()), n));
    // [a(f), a*(g)] on sector n.
    ComplexMatrix comm = ComplexMatrix(
        smeared_operator(f, LadderKind::annihilate, n + 1, cell_volume) *
        smeared_operator(g, LadderKind::create, n, cell_volume));
    if (n >= 1)
      comm -= ComplexMatrix(smeared_operator(g, LadderKind::create, n - 1, cell_volume) *
                            smeared_operator(f, LadderKind::annihilate, n, cell_volume));
    comm -= fg * ComplexMatrix::Identity(dim, dim);
    res.creation_commutator = std::max(res.creation_commutator, largest_singular_value(comm));

    if (n >= 2) {
      const ComplexMatrix ann = ComplexMatrix(
          smeared_operator(f, LadderKind::annihilate, n - 1, cell_volume) *
              smeared_operator(g, LadderKind::annihilate, n, cell_volume) -
          smeared_operator(g, LadderKind::annihilate, n - 1, cell_volume) *
              smeared_operator(f, LadderKind::annihilate, n, cell_volume));
      res.annihilation_commutator =
          std::max(res.annihilation_commutator, largest_singular_value(ann));
    }
  }
  return res;
}

Eigen::Index SectorState::dim1() const {
  return static_cast<Eigen::Index>(sector_dimension(modes, n1));
}
Eigen::Index SectorState::dim2() const {
  return static_cast<Eigen::Index>(sector_dimension(modes, n2));
}

Eigen::Map<ComplexMatrix> SectorState::matrix() {
  return {coefficients.data(), dim1(), dim2()};
}
Eigen::Map<const ComplexMatrix> SectorState::matrix() const {
  return {coefficients.data(), dim1(), dim2()};
}

SectorState SectorState::zero(int modes, int n1, int n2) {
  SectorState s;
  s.modes = modes;
  s.n1 = n1;
  s.n2 = n2;
  s.coefficients = ComplexVector::Zero(s.dim1() * s.dim2());
  return s;
}

ComplexVector symmetric_power(const ComplexVector& f, int particles, double cell_volume) {
  const int modes = static_cast<int>(f.size());
  const auto basis = shared_sector_basis(modes, particles);
  const ComplexVector alpha = std::sqrt(cell_volume) * f;
  ComplexVector out(static_cast<Eigen::Index>(basis->size()));
  for (std::size_t s = 0; s < basis->size(); ++s) {
    const auto m = basis->occupation(s);
    Complex amp(1.0, 0.0);
    double log_norm = 0.0;
    for (int i = 0; i < modes; ++i) {
      if (m[i] == 0) continue;
      amp *= std::pow(alpha[i], m[i]);
      log_norm += log_factorial(m[i]);
    }
    out[static_cast<Eigen::Index>(s)] = amp * std::exp(-0.5 * log_norm);
  }
  return out;
}

SectorState product_sector_state(const ComplexVector& u, const ComplexVector& v, int n1, int n2,
                                 double cell_volume) {
  if (u.size() != v.size()) throw ConfigError("orbitals must live on the same lattice");
  if (std::abs(cell_volume * u.squaredNorm() - 1.0) > 1e-9 ||
      std::abs(cell_volume * v.squaredNorm() - 1.0) > 1e-9)
    throw ConfigError("product state needs normalized orbitals");
  const int modes = static_cast<int>(u.size());
  // f^{⊗n}/sqrt(n!) has norm ||f||^n / sqrt(n!); rescale to unit norm.
  const ComplexVector a = symmetric_power(u, n1, cell_volume) * std::exp(0.5 * log_factorial(n1));
  const ComplexVector b = symmetric_power(v, n2, cell_volume) * std::exp(0.5 * log_factorial(n2));
  SectorState s = SectorState::zero(modes, n1, n2);
  s.matrix() = a * b.transpose();
  return s;
}

TruncatedFockState::TruncatedFockState(int modes, int cutoff1, int cutoff2)
    : modes_(modes), cutoff1_(cutoff1), cutoff2_(cutoff2) {
  if (cutoff1 < 0 || cutoff2 < 0) throw ConfigError("Fock cutoffs must be nonnegative");
  sectors_.reserve(static_cast<std::size_t>((cutoff1 + 1) * (cutoff2 + 1)));
  for (int n1 = 0; n1 <= cutoff1; ++n1)
    for (int n2 = 0; n2 <= cutoff2; ++n2) sectors_.push_back(SectorState::zero(modes, n1, n2));
}

SectorState& TruncatedFockState::sector(int n1, int n2) {
  return sectors_.at(static_cast<std::size_t>(n1 * (cutoff2_ + 1) + n2));
}
const SectorState& TruncatedFockState::sector(int n1, int n2) const {
  return sectors_.at(static_cast<std::size_t>(n1 * (cutoff2_ + 1) + n2));
}

double TruncatedFockState::norm_squared() const {
  double total = 0.0;
  for (const auto& s : sectors_) total += s.coefficients.squaredNorm();
  return total;
}

TruncatedFockState coherent_state(const ComplexVector& f, const ComplexVector& g, int cutoff1,
                                  int cutoff2, double cell_volume, double deficit_bound) {
  if (f.size() != g.size()) throw ConfigError("coherent-state orbitals must have equal length");
  const int modes = static_cast<int>(f.size());
  TruncatedFockState state(modes, cutoff1, cutoff2);
  const double norm_f = cell_volume * f.squaredNorm();
  const double norm_g = cell_volume * g.squaredNorm();
  std::vector<ComplexVector> a(static_cast<std::size_t>(cutoff1 + 1));
  std::vector<ComplexVector> b(static_cast<std::size_t>(cutoff2 + 1));
  for (int n = 0; n <= cutoff1; ++n)
    a[n] = std::exp(-0.5 * norm_f) * symmetric_power(f, n, cell_volume);
  for (int n = 0; n <= cutoff2; ++n)
    b[n] = std::exp(-0.5 * norm_g) * symmetric_power(g, n, cell_volume);
  for (auto& s : state.sectors()) s.matrix() = a[s.n1] * b[s.n2].transpose();
  state.deficit_flag = state.deficit() > deficit_bound;
  return state;
}

double poisson_tail(double mean, int cutoff) {
  if (mean < 0.0) throw ConfigError("Poisson mean must be nonnegative");
  if (mean == 0.0) return 0.0;
  // Sum the tail directly to avoid cancellation in 1 - CDF.
  double term = std::exp(-mean + (cutoff + 1) * std::log(mean) - log_factorial(cutoff + 1));
  double tail = 0.0;
  for (int n = cutoff + 1; term > 0.0 && n < cutoff + 10000; ++n) {
    tail += term;
    term *= mean / (n + 1);
    if (term < tail * 1e-18) break;
  }
  return tail;
}

double coherent_deficit(double mean1, double mean2, int cutoff1, int cutoff2) {
  const double t1 = poisson_tail(mean1, cutoff1);
  const double t2 = poisson_tail(mean2, cutoff2);
  return t1 + t2 - t1 * t2;
}

double number_expectation(const TruncatedFockState& state, NumberObservable which) {
  double weight_sum = 0.0;
  double value = 0.0;
  for (const auto& s : state.sectors()) {
    const double w = s.coefficients.squaredNorm();
    weight_sum += w;
    switch (which) {
      case NumberObservable::species1: value += w * s.n1; break;
      case NumberObservable::species2: value += w * s.n2; break;
      case NumberObservable::product: value += w * s.n1 * s.n2; break;
    }
  }
  if (!(weight_sum > 0.0)) throw NumericalError("number expectation of a zero-norm state");
  return value / weight_sum;
}

TruncatedFockState displaced_annihilate(const TruncatedFockState& state, int species, int mode,
                                        Complex alpha) {
  if (species != 1 && species != 2) throw ConfigError("species must be 1 or 2");
  check_mode(mode, state.modes());
  TruncatedFockState out(state.modes(), state.cutoff1(), state.cutoff2());
  out.t = state.t;
  const int top = species == 1 ? state.cutoff1() : state.cutoff2();
  std::vector<SparseReal> lower(static_cast<std::size_t>(top + 1));
  for (int n = 1; n <= top; ++n) lower[n] = annihilation_matrix(mode, state.modes(), n);

  for (auto& target : out.sectors()) {
    const SectorState& same = state.sector(target.n1, target.n2);
    auto result = target.matrix();
    result = -alpha * same.matrix();
    if (species == 1 && target.n1 < top) {
      const SectorState& up = state.sector(target.n1 + 1, target.n2);
      result += (SparseComplex(lower[target.n1 + 1].cast<Complex>()) * up.matrix()).eval();
    } else if (species == 2 && target.n2 < top) {
      const SectorState& up = state.sector(target.n1, target.n2 + 1);
      result += (up.matrix() * SparseComplex(lower[target.n2 + 1].cast<Complex>()).transpose()).eval();
    }
  }
  return out;
}

}  // namespace mixlab
