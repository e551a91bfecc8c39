#pragma once

// Coupled Hartree equations for the two condensate orbitals on the lattice:
//
//   i du/dt = -Delta u + (V1 * |u|^2) u + c2 (V12 * |v|^2) u
//   i dv/dt = -Delta v + (V2 * |v|^2) v + c1 (V12 * |u|^2) v
//
// with the lattice convolution (V * rho)_i = h^d sum_j V(i, j) rho_j.

#include <iosfwd>
#include <string>
#include <vector>

#include "mixlab/model.hpp"

namespace mixlab {

struct HartreeState {
  ComplexVector u;
  ComplexVector v;
  double t = 0.0;
};

struct HartreeDerivative {
  ComplexVector du;
  ComplexVector dv;
};

struct HartreeSample {
  double t = 0.0;
  HartreeState state;
  double mass1 = 0.0;
  double mass2 = 0.0;
  double energy = 0.0;
};

struct HartreeTrajectory {
  std::vector<HartreeSample> samples;

  const HartreeSample& front() const { return samples.front(); }
  const HartreeSample& back() const { return samples.back(); }
};

/// Lattice convolution (V * rho)_i = h^d sum_j V(i,j) rho_j.
Eigen::VectorXd convolve(const RealMatrix& potential, const Eigen::VectorXd& density,
                         double cell_volume);

HartreeDerivative hartree_rhs(const HartreeState& state, const LatticeModel& model,
                              const CouplingConstants& couplings);

/// Lattice-weighted masses (h^d |u|^2, h^d |v|^2).
std::pair<double, double> mass(const HartreeState& state, double cell_volume);

/// Hartree energy per particle in the mean-field limit:
/// c1 <u,-Δu> + c2 <v,-Δv> + c1/2 ∬V1|u|²|u|² + c2/2 ∬V2|v|²|v|² + c1 c2 ∬V12|u|²|v|².
double energy(const HartreeState& state, const LatticeModel& model,
              const CouplingConstants& couplings);

/// Strang splitting: half potential phase, exact kinetic exponential, half
/// potential phase with the densities recomputed. Each stage is unitary.
class StrangIntegrator {
public:
  StrangIntegrator(const LatticeModel& model, const CouplingConstants& couplings, double dt);

  HartreeState step(const HartreeState& state) const;
  double dt() const { return dt_; }

private:
  void potential_phase(ComplexVector& u, ComplexVector& v, double tau) const;

  const LatticeModel* model_;
  CouplingConstants couplings_;
  double dt_;
  ComplexMatrix kinetic_;  // exp(-i dt (-Delta))
};

HartreeState step_strang(const HartreeState& state, const LatticeModel& model,
                         const CouplingConstants& couplings, double dt);

/// Integrates from `initial` up to t_final in round(t_final/dt) steps,
/// recording every `stride` steps and always the final state. Throws
/// NumericalError naming the step index on non-finite values.
HartreeTrajectory evolve(const HartreeState& initial, const LatticeModel& model,
                         const CouplingConstants& couplings, double t_final, double dt,
                         int stride);

/// States at each requested time (ascending, multiples of dt up to rounding).
std::vector<HartreeState> evolve_to_times(const HartreeState& initial, const LatticeModel& model,
                                          const CouplingConstants& couplings,
                                          const std::vector<double>& times, double dt);

/// Exact solution of the potential-free problem: exp(-i t (-Delta)) applied to both orbitals.
HartreeState free_evolution(const HartreeState& initial, const LatticeModel& model, double t);

/// Gaussian wave packet on the lattice, normalized so that h^d ||u||^2 = 1.
/// `wavenumber` is an integer number of periods along axis 0.
ComplexVector gaussian_orbital(const LatticeGeometry& geometry, double center, double width,
                               int wavenumber);

/// CSV with columns t,mass1,mass2,energy.
void write_trajectory_csv(const HartreeTrajectory& trajectory, std::ostream& out);

/// Flat little-endian complex64 records (u then v per sample) plus a text header
/// next to it at `<path>.hdr`.
void write_trajectory_snapshots(const HartreeTrajectory& trajectory, const std::string& path);

}  // namespace mixlab
