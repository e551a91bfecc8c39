#include "mixlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mixlab {

int LatticeGeometry::total_sites() const {
  int m = 1;
  for (int k = 0; k < dimension; ++k) m *= sites_per_axis;
  return m;
}

double LatticeGeometry::cell_volume() const { return std::pow(spacing, dimension); }

std::array<int, 3> LatticeGeometry::coordinates(int index) const {
  std::array<int, 3> c{0, 0, 0};
  for (int k = 0; k < dimension; ++k) {
    c[k] = index % sites_per_axis;
    index /= sites_per_axis;
  }
  return c;
}

double LatticeGeometry::distance(int i, int j) const {
  const auto ci = coordinates(i);
  const auto cj = coordinates(j);
  double r2 = 0.0;
  for (int k = 0; k < dimension; ++k) {
    int delta = std::abs(ci[k] - cj[k]);
    delta = std::min(delta, sites_per_axis - delta);
    r2 += static_cast<double>(delta) * delta;
  }
  return spacing * std::sqrt(r2);
}

void LatticeGeometry::validate() const {
  if (dimension < 1 || dimension > 3)
    throw ConfigError("lattice dimension must be 1, 2 or 3, got " + std::to_string(dimension));
  if (sites_per_axis < 1)
    throw ConfigError("sites_per_axis must be positive, got " + std::to_string(sites_per_axis));
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw ConfigError("lattice spacing must be positive and finite");
}

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::soft_coulomb: return "soft_coulomb";
    case PotentialKind::yukawa: return "yukawa";
    case PotentialKind::contact: return "contact";
  }
  return "unknown";
}

PotentialKind potential_kind_from_string(const std::string& name) {
  if (name == "zero") return PotentialKind::zero;
  if (name == "gaussian") return PotentialKind::gaussian;
  if (name == "soft_coulomb") return PotentialKind::soft_coulomb;
  if (name == "yukawa") return PotentialKind::yukawa;
  if (name == "contact") return PotentialKind::contact;
  throw ConfigError("unknown potential kind '" + name + "'");
}

void PotentialSpec::validate() const {
  if (!std::isfinite(strength)) throw ConfigError("potential strength must be finite");
  switch (kind) {
    case PotentialKind::zero:
    case PotentialKind::contact:
      return;
    case PotentialKind::gaussian:
    case PotentialKind::soft_coulomb:
    case PotentialKind::yukawa:
      if (!(range > 0.0) || !std::isfinite(range))
        throw ConfigError(to_string(kind) + " potential needs a positive range, got " +
                          std::to_string(range));
      return;
  }
  throw ConfigError("unknown potential kind");
}

void CouplingConstants::validate() const {
  if (!(c1 >= 0.0) || !(c2 >= 0.0))
    throw ConfigError("coupling constants must be nonnegative");
  if (std::abs(c1 + c2 - 1.0) > 4.0 * std::numeric_limits<double>::epsilon())
    throw ConfigError("coupling constants must satisfy c1 + c2 = 1");
}

double potential_value(const PotentialSpec& spec, double r, double spacing, int dimension) {
  const double g = spec.strength;
  switch (spec.kind) {
    case PotentialKind::zero:
      return 0.0;
    case PotentialKind::gaussian: {
      const double x = r / spec.range;
      return g * std::exp(-x * x);
    }
    case PotentialKind::soft_coulomb:
      return g / std::sqrt(r * r + spec.range * spec.range);
    case PotentialKind::yukawa: {
      // r = 0 takes the value at half a lattice spacing.
      const double rr = std::max(r, 0.5 * spacing);
      return g * std::exp(-rr / spec.range) / rr;
    }
    case PotentialKind::contact:
      return r == 0.0 ? g / std::pow(spacing, dimension) : 0.0;
  }
  throw ConfigError("unknown potential kind");
}

RealMatrix build_laplacian(int dimension, int sites_per_axis, double spacing) {
  if (sites_per_axis < 2)
    throw ConfigError("laplacian stencil needs at least 2 sites per axis");
  if (!(spacing > 0.0)) throw ConfigError("lattice spacing must be positive");
  LatticeGeometry geometry{dimension, sites_per_axis, spacing};
  geometry.validate();

  const int m = geometry.total_sites();
  const double inv_h2 = 1.0 / (spacing * spacing);
  RealMatrix lap = RealMatrix::Zero(m, m);
  int stride = 1;
  for (int axis = 0; axis < dimension; ++axis) {
    for (int i = 0; i < m; ++i) {
      const int c = (i / stride) % sites_per_axis;
      const int base = i - c * stride;
      const int up = base + ((c + 1) % sites_per_axis) * stride;
      const int down = base + ((c + sites_per_axis - 1) % sites_per_axis) * stride;
      lap(i, i) += 2.0 * inv_h2;
      lap(i, up) -= inv_h2;
      lap(i, down) -= inv_h2;
    }
    stride *= sites_per_axis;
  }
  return lap;
}

RealMatrix sample_potential(const PotentialSpec& spec, const LatticeGeometry& geometry) {
  spec.validate();
  geometry.validate();
  const int m = geometry.total_sites();
  RealMatrix v(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double value =
          potential_value(spec, geometry.distance(i, j), geometry.spacing, geometry.dimension);
      v(i, j) = value;
      v(j, i) = value;
    }
  }
  return v;
}

LatticeModel LatticeModel::build(const LatticeGeometry& geometry, const PotentialSpec& v1,
                                 const PotentialSpec& v2, const PotentialSpec& v12) {
  geometry.validate();
  const int m = geometry.total_sites();
  RealMatrix lap = geometry.sites_per_axis == 1
                       ? RealMatrix::Zero(m, m)
                       : build_laplacian(geometry.dimension, geometry.sites_per_axis,
                                         geometry.spacing);
  return from_matrices(geometry, std::move(lap), sample_potential(v1, geometry),
                       sample_potential(v2, geometry), sample_potential(v12, geometry));
}

LatticeModel LatticeModel::from_matrices(const LatticeGeometry& geometry, RealMatrix laplacian,
                                         RealMatrix v1, RealMatrix v2, RealMatrix v12) {
  geometry.validate();
  const int m = geometry.total_sites();
  for (const RealMatrix* mat : {&laplacian, &v1, &v2, &v12}) {
    if (mat->rows() != m || mat->cols() != m)
      throw ConfigError("model matrix has wrong shape for " + std::to_string(m) + " sites");
    if (!mat->allFinite()) throw ConfigError("model matrix has non-finite entries");
    if (m > 0 && (*mat - mat->transpose()).cwiseAbs().maxCoeff() > 0.0)
      throw ConfigError("model matrices must be symmetric");
  }
  LatticeModel model;
  model.geometry = geometry;
  model.laplacian = std::move(laplacian);
  model.v1 = std::move(v1);
  model.v2 = std::move(v2);
  model.v12 = std::move(v12);
  return model;
}

std::uint64_t LatticeModel::fingerprint() const {
  std::uint64_t hash = 1469598103934665603ull;
  auto mix = [&hash](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < bytes; ++k) {
      hash ^= p[k];
      hash *= 1099511628211ull;
    }
  };
  mix(&geometry.dimension, sizeof(int));
  mix(&geometry.sites_per_axis, sizeof(int));
  mix(&geometry.spacing, sizeof(double));
  for (const RealMatrix* mat : {&laplacian, &v1, &v2, &v12})
    mix(mat->data(), sizeof(double) * static_cast<std::size_t>(mat->size()));
  return hash;
}

SequenceReport validate_sequences(std::span<const ParticlePair> pairs,
                                  const CouplingConstants& couplings, double tolerance_d) {
  if (pairs.empty()) throw ConfigError("particle-number sequence is empty");
  couplings.validate();
  if (!(tolerance_d > 0.0)) throw ConfigError("sequence tolerance D must be positive");

  SequenceReport report;
  report.ratio_bounds.fill(0.0);
  std::ostringstream offenders;
  bool rejected = false;
  for (const auto& p : pairs) {
    if (p.n1 < 1 || p.n2 < 1)
      throw ConfigError("particle numbers must be positive, got (" + std::to_string(p.n1) +
                        ", " + std::to_string(p.n2) + ")");
    const double n1 = p.n1;
    const double n2 = p.n2;
    const double total = n1 + n2;
    const double dev1 = std::abs(n1 / total - couplings.c1);
    const double dev2 = std::abs(n2 / total - couplings.c2);
    report.max_deviation1 = std::max(report.max_deviation1, dev1);
    report.max_deviation2 = std::max(report.max_deviation2, dev2);
    const std::array<double, 5> ratios{total / n1, total / n2, n1 / n2, n2 / n1,
                                       std::sqrt(n1 * n2) / total};
    for (std::size_t k = 0; k < ratios.size(); ++k)
      report.ratio_bounds[k] = std::max(report.ratio_bounds[k], ratios[k]);
    if (dev1 > tolerance_d / n2 || dev2 > tolerance_d / n1) {
      offenders << (rejected ? ", " : "") << '(' << p.n1 << ", " << p.n2 << ")";
      rejected = true;
    }
  }
  if (rejected)
    throw SequenceRejected("particle-number pairs violate the ratio condition: " +
                           offenders.str());
  return report;
}

}  // namespace mixlab
