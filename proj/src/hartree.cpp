#include "mixlab/hartree.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>

namespace mixlab {
namespace {

void check_dimensions(const HartreeState& state, const LatticeModel& model) {
  const auto m = static_cast<Eigen::Index>(model.sites());
  if (state.u.size() != m || state.v.size() != m)
    throw ConfigError("Hartree state has length " + std::to_string(state.u.size()) + "/" +
                      std::to_string(state.v.size()) + ", lattice has " + std::to_string(m) +
                      " sites");
}

ComplexMatrix kinetic_propagator(const RealMatrix& laplacian, double t) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(laplacian);
  const ComplexVector phases =
      (eig.eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
  const ComplexMatrix q = eig.eigenvectors().cast<Complex>();
  return q * phases.asDiagonal() * q.transpose();
}

}  // namespace

Eigen::VectorXd convolve(const RealMatrix& potential, const Eigen::VectorXd& density,
                         double cell_volume) {
  return cell_volume * (potential * density);
}

HartreeDerivative hartree_rhs(const HartreeState& state, const LatticeModel& model,
                              const CouplingConstants& couplings) {
  check_dimensions(state, model);
  const double hd = model.cell_volume();
  const Eigen::VectorXd rho_u = state.u.cwiseAbs2();
  const Eigen::VectorXd rho_v = state.v.cwiseAbs2();
  const Eigen::VectorXd w_u =
      convolve(model.v1, rho_u, hd) + couplings.c2 * convolve(model.v12, rho_v, hd);
  const Eigen::VectorXd w_v =
      convolve(model.v2, rho_v, hd) + couplings.c1 * convolve(model.v12, rho_u, hd);
  const Complex minus_i(0.0, -1.0);
  HartreeDerivative d;
  d.du = minus_i * (model.laplacian.cast<Complex>() * state.u +
                    w_u.cast<Complex>().cwiseProduct(state.u));
  d.dv = minus_i * (model.laplacian.cast<Complex>() * state.v +
                    w_v.cast<Complex>().cwiseProduct(state.v));
  return d;
}

std::pair<double, double> mass(const HartreeState& state, double cell_volume) {
  return {cell_volume * state.u.squaredNorm(), cell_volume * state.v.squaredNorm()};
}

double energy(const HartreeState& state, const LatticeModel& model,
              const CouplingConstants& couplings) {
  check_dimensions(state, model);
  const double hd = model.cell_volume();
  const Eigen::VectorXd rho_u = state.u.cwiseAbs2();
  const Eigen::VectorXd rho_v = state.v.cwiseAbs2();
  const double kin_u = hd * state.u.dot(model.laplacian.cast<Complex>() * state.u).real();
  const double kin_v = hd * state.v.dot(model.laplacian.cast<Complex>() * state.v).real();
  const double hd2 = hd * hd;
  const double pot_u = hd2 * rho_u.dot(model.v1 * rho_u);
  const double pot_v = hd2 * rho_v.dot(model.v2 * rho_v);
  const double pot_uv = hd2 * rho_u.dot(model.v12 * rho_v);
  const double c1 = couplings.c1;
  const double c2 = couplings.c2;
  return c1 * kin_u + c2 * kin_v + 0.5 * c1 * pot_u + 0.5 * c2 * pot_v + c1 * c2 * pot_uv;
}

StrangIntegrator::StrangIntegrator(const LatticeModel& model, const CouplingConstants& couplings,
                                   double dt)
    : model_(&model), couplings_(couplings), dt_(dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  kinetic_ = kinetic_propagator(model.laplacian, dt);
}

void StrangIntegrator::potential_phase(ComplexVector& u, ComplexVector& v, double tau) const {
  const double hd = model_->cell_volume();
  const Eigen::VectorXd rho_u = u.cwiseAbs2();
  const Eigen::VectorXd rho_v = v.cwiseAbs2();
  const Eigen::VectorXd w_u =
      convolve(model_->v1, rho_u, hd) + couplings_.c2 * convolve(model_->v12, rho_v, hd);
  const Eigen::VectorXd w_v =
      convolve(model_->v2, rho_v, hd) + couplings_.c1 * convolve(model_->v12, rho_u, hd);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    u[i] *= std::polar(1.0, -tau * w_u[i]);
    v[i] *= std::polar(1.0, -tau * w_v[i]);
  }
}

HartreeState StrangIntegrator::step(const HartreeState& state) const {
  check_dimensions(state, *model_);
  HartreeState next{state.u, state.v, state.t + dt_};
  potential_phase(next.u, next.v, 0.5 * dt_);
  next.u = kinetic_ * next.u;
  next.v = kinetic_ * next.v;
  potential_phase(next.u, next.v, 0.5 * dt_);
  return next;
}

HartreeState step_strang(const HartreeState& state, const LatticeModel& model,
                         const CouplingConstants& couplings, double dt) {
  return StrangIntegrator(model, couplings, dt).step(state);
}

HartreeTrajectory evolve(const HartreeState& initial, const LatticeModel& model,
                         const CouplingConstants& couplings, double t_final, double dt,
                         int stride) {
  check_dimensions(initial, model);
  if (!(t_final >= 0.0)) throw ConfigError("t_final must be nonnegative");
  if (stride < 1) throw ConfigError("sample stride must be positive");
  const StrangIntegrator integrator(model, couplings, dt);
  const long steps = std::lround(t_final / dt);
  const double hd = model.cell_volume();

  HartreeTrajectory traj;
  auto record = [&](const HartreeState& s) {
    const auto [m1, m2] = mass(s, hd);
    traj.samples.push_back({s.t, s, m1, m2, energy(s, model, couplings)});
  };

  HartreeState state = initial;
  record(state);
  for (long k = 1; k <= steps; ++k) {
    state = integrator.step(state);
    if (!state.u.allFinite() || !state.v.allFinite())
      throw NumericalError("Hartree integration produced non-finite values at step " +
                           std::to_string(k));
    if (k % stride == 0 || k == steps) record(state);
  }
  return traj;
}

std::vector<HartreeState> evolve_to_times(const HartreeState& initial, const LatticeModel& model,
                                          const CouplingConstants& couplings,
                                          const std::vector<double>& times, double dt) {
  check_dimensions(initial, model);
  const StrangIntegrator integrator(model, couplings, dt);
  std::vector<HartreeState> out;
  out.reserve(times.size());
  HartreeState state = initial;
  long done = 0;
  for (double t : times) {
    const long target = std::lround((t - initial.t) / dt);
    if (target < done) throw ConfigError("sample times must be ascending");
    for (; done < target; ++done) {
      state = integrator.step(state);
      if (!state.u.allFinite() || !state.v.allFinite())
        throw NumericalError("Hartree integration produced non-finite values at step " +
                             std::to_string(done + 1));
    }
    state.t = t;
    out.push_back(state);
  }
  return out;
}

HartreeState free_evolution(const HartreeState& initial, const LatticeModel& model, double t) {
  check_dimensions(initial, model);
  const ComplexMatrix k = kinetic_propagator(model.laplacian, t);
  return {k * initial.u, k * initial.v, initial.t + t};
}

ComplexVector gaussian_orbital(const LatticeGeometry& geometry, double center, double width,
                               int wavenumber) {
  geometry.validate();
  if (!(width > 0.0)) throw ConfigError("orbital width must be positive");
  const int m = geometry.total_sites();
  const double length = geometry.sites_per_axis * geometry.spacing;
  ComplexVector u(m);
  for (int i = 0; i < m; ++i) {
    const auto c = geometry.coordinates(i);
    double r2 = 0.0;
    for (int k = 0; k < geometry.dimension; ++k) {
      double dx = std::fmod(c[k] * geometry.spacing - center, length);
      if (dx < 0) dx += length;
      dx = std::min(dx, length - dx);
      r2 += dx * dx;
    }
    const double phase = 2.0 * std::numbers::pi * wavenumber * c[0] / geometry.sites_per_axis;
    u[i] = std::polar(std::exp(-0.5 * r2 / (width * width)), phase);
  }
  u /= std::sqrt(geometry.cell_volume() * u.squaredNorm());
  return u;
}

void write_trajectory_csv(const HartreeTrajectory& trajectory, std::ostream& out) {
  out << "t,mass1,mass2,energy\n";
  out << std::setprecision(17);
  for (const auto& s : trajectory.samples)
    out << s.t << ',' << s.mass1 << ',' << s.mass2 << ',' << s.energy << '\n';
}

void write_trajectory_snapshots(const HartreeTrajectory& trajectory, const std::string& path) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw std::ios_base::failure("cannot open " + path);
  auto put = [&bin](float x) {
    auto bits = std::bit_cast<std::uint32_t>(x);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    bin.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  };
  for (const auto& s : trajectory.samples) {
    for (const ComplexVector* field : {&s.state.u, &s.state.v})
      for (Eigen::Index i = 0; i < field->size(); ++i) {
        put(static_cast<float>((*field)[i].real()));
        put(static_cast<float>((*field)[i].imag()));
      }
  }
  if (!bin) throw std::ios_base::failure("write failed for " + path);

  std::ofstream hdr(path + ".hdr");
  if (!hdr) throw std::ios_base::failure("cannot open " + path + ".hdr");
  const auto sites = trajectory.samples.empty() ? 0 : trajectory.samples.front().state.u.size();
  hdr << "format complex64-le\n"
      << "layout sample-major; per sample: u[sites] then v[sites]; each entry re,im float32\n"
      << "sites " << sites << "\n"
      << "samples " << trajectory.samples.size() << "\n"
      << "times";
  hdr << std::setprecision(17);
  for (const auto& s : trajectory.samples) hdr << ' ' << s.t;
  hdr << '\n';
}

}  // namespace mixlab
