#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mixlab/hartree.hpp"
#include "oracles.hpp"

using namespace mixlab;

namespace {

const PotentialSpec kGauss{PotentialKind::gaussian, 1.0, 1.0};

ComplexVector plane_wave(int l, int k, double h) {
  ComplexVector u(l);
  for (int j = 0; j < l; ++j) u[j] = std::polar(1.0, 2.0 * std::numbers::pi * k * j / l);
  return u / std::sqrt(h * l);
}

double plane_wave_energy(int l, int k, double h) {
  return (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * k / l)) / (h * h);
}

HartreeState gaussian_state(const LatticeGeometry& g) {
  return {gaussian_orbital(g, 0.0, 1.0, 1), gaussian_orbital(g, 1.5, 0.8, 0), 0.0};
}

double distance(const HartreeState& a, const HartreeState& b) {
  return std::sqrt((a.u - b.u).squaredNorm() + (a.v - b.v).squaredNorm());
}

}  // namespace

TEST_CASE("rhs of a free Laplacian eigenvector is a pure rotation") {
  const LatticeGeometry g{1, 4, 1.0};
  const auto model = LatticeModel::build(g, {}, {}, {});
  for (int k = 0; k < 4; ++k) {
    const HartreeState s{plane_wave(4, k, 1.0), plane_wave(4, (k + 1) % 4, 1.0), 0.0};
    const auto d = hartree_rhs(s, model, {0.5, 0.5});
    const Complex rot(0.0, -plane_wave_energy(4, k, 1.0));
    CHECK((d.du - rot * s.u).norm() < 1e-13);
  }
}

TEST_CASE("single-site rhs is the pure nonlinear phase") {
  const auto model = LatticeModel::build({1, 1, 1.0}, kGauss, {}, {});
  const HartreeState s{ComplexVector::Ones(1), ComplexVector::Ones(1), 0.0};
  const auto d = hartree_rhs(s, model, {0.5, 0.5});
  CHECK(std::abs(d.du[0] - Complex(0.0, -1.0)) < 1e-15);
  CHECK(std::abs(d.dv[0]) == 0.0);
}

TEST_CASE("swap symmetry of the rhs") {
  const LatticeGeometry g{1, 6, 1.0};
  const auto model = LatticeModel::build(g, kGauss, kGauss, {PotentialKind::soft_coulomb, 0.7, 1.0});
  const ComplexVector u = gaussian_orbital(g, 1.0, 1.2, 1);
  const auto d = hartree_rhs({u, u, 0.0}, model, {0.5, 0.5});
  CHECK((d.du - d.dv).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rhs rejects mismatched lengths") {
  const auto model = LatticeModel::build({1, 4, 1.0}, {}, {}, {});
  CHECK_THROWS_AS(hartree_rhs({ComplexVector::Ones(3), ComplexVector::Ones(4), 0.0}, model, {}),
                  ConfigError);
}

TEST_CASE("free Strang step multiplies plane waves by their phase") {
  const double h = 0.5;
  const auto model = LatticeModel::build({1, 4, h}, {}, {}, {});
  const double dt = 0.037;
  for (int k = 0; k < 4; ++k) {
    const HartreeState s{plane_wave(4, k, h), plane_wave(4, 3 - k, h), 0.0};
    const auto next = step_strang(s, model, {0.5, 0.5}, dt);
    const Complex phase = std::polar(1.0, -plane_wave_energy(4, k, h) * dt);
    CHECK((next.u - phase * s.u).norm() < 1e-13);
    CHECK(next.t == doctest::Approx(dt));
  }
}

TEST_CASE("single-site Strang step is exact") {
  const auto model = LatticeModel::build({1, 1, 1.0}, kGauss, {}, {});
  const HartreeState s{ComplexVector::Ones(1), ComplexVector::Ones(1), 0.0};
  const double dt = 0.3;
  const auto next = step_strang(s, model, {0.5, 0.5}, dt);
  CHECK(std::abs(next.u[0] - std::polar(1.0, -dt)) < 1e-15);
  CHECK(std::abs(next.v[0] - 1.0) < 1e-15);
}

TEST_CASE("Strang local error is third order") {
  // Reference: many tiny steps. Error of one step of size dt relative to it.
  const LatticeGeometry g{1, 8, 1.0};
  const auto model =
      LatticeModel::build(g, kGauss, {PotentialKind::gaussian, 1.5, 1.0}, kGauss);
  const CouplingConstants c{0.4, 0.6};
  const HartreeState s0 = gaussian_state(g);
  auto reference = [&](double dt) {
    HartreeState s = s0;
    const StrangIntegrator fine(model, c, dt / 256.0);
    for (int k = 0; k < 256; ++k) s = fine.step(s);
    return s;
  };
  std::vector<double> errors;
  for (double dt : {0.08, 0.04, 0.02}) errors.push_back(distance(step_strang(s0, model, c, dt), reference(dt)));
  const double r1 = errors[0] / errors[1];
  const double r2 = errors[1] / errors[2];
  CHECK(r1 > 6.5);
  CHECK(r2 > 7.0);
  CHECK(r2 < 9.0);
}

TEST_CASE("Strang steps conserve each mass to roundoff") {
  const LatticeGeometry g{2, 3, 0.8};
  const auto model = LatticeModel::build(g, kGauss, kGauss, {PotentialKind::yukawa, -0.5, 1.0});
  for (int trial = 0; trial < 20; ++trial) {
    HartreeState s{oracle::random_unit_vector(9), oracle::random_unit_vector(9), 0.0};
    s.u /= std::sqrt(g.cell_volume());
    s.v /= std::sqrt(g.cell_volume());
    const double dt = oracle::uniform(0.001, 0.1);
    const auto [a1, a2] = mass(s, g.cell_volume());
    const auto [b1, b2] = mass(step_strang(s, model, {0.3, 0.7}, dt), g.cell_volume());
    CHECK(std::abs(a1 - b1) <= 1e-12);
    CHECK(std::abs(a2 - b2) <= 1e-12);
  }
}

TEST_CASE("zero-potential evolve matches the exact propagator") {
  const LatticeGeometry g{1, 8, 1.0};
  const auto model = LatticeModel::build(g, {}, {}, {});
  const HartreeState s0 = gaussian_state(g);
  for (double dt : {1e-3, 0.05, 0.25}) {
    const auto traj = evolve(s0, model, {0.5, 0.5}, 1.0, dt, 1000000);
    CHECK(distance(traj.back().state, free_evolution(s0, model, 1.0)) <= 1e-10);
  }
}

TEST_CASE("evolve trajectory shape") {
  const LatticeGeometry g{1, 4, 1.0};
  const auto model = LatticeModel::build(g, kGauss, kGauss, kGauss);
  const HartreeState s0 = gaussian_state(g);
  const auto traj = evolve(s0, model, {0.5, 0.5}, 0.1, 0.01, 3);
  REQUIRE(traj.samples.size() == 5);  // steps 0, 3, 6, 9 and the final step 10
  CHECK(traj.front().state.u == s0.u);
  CHECK(traj.front().t == 0.0);
  for (std::size_t k = 1; k < traj.samples.size(); ++k)
    CHECK(traj.samples[k].t > traj.samples[k - 1].t);
  CHECK(traj.back().t == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(evolve(s0, model, {0.5, 0.5}, 0.1, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(evolve(s0, model, {0.5, 0.5}, 0.1, 0.01, 0), ConfigError);
}

TEST_CASE("evolve aborts on non-finite values") {
  const LatticeGeometry g{1, 4, 1.0};
  const auto model = LatticeModel::build(g, kGauss, {}, {});
  HartreeState s = gaussian_state(g);
  s.u[2] = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
  try {
    evolve(s, model, {0.5, 0.5}, 0.05, 0.01, 1);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
  }
}

TEST_CASE("mass and energy conservation with gaussian interactions") {
  const LatticeGeometry g{1, 8, 1.0};
  const auto model = LatticeModel::build(g, kGauss, kGauss, kGauss);
  const HartreeState s0 = gaussian_state(g);
  const auto traj = evolve(s0, model, {0.5, 0.5}, 1.0, 1e-3, 10);
  double mass_drift = 0.0, energy_drift = 0.0;
  for (const auto& s : traj.samples) {
    mass_drift = std::max({mass_drift, std::abs(s.mass1 - 1.0), std::abs(s.mass2 - 1.0)});
    energy_drift = std::max(energy_drift, std::abs(s.energy - traj.front().energy));
  }
  CHECK(mass_drift <= 1e-9);
  CHECK(energy_drift <= 1e-6);
}

TEST_CASE("time reversal by conjugation") {
  const LatticeGeometry g{1, 8, 1.0};
  const auto model = LatticeModel::build(g, kGauss, kGauss, kGauss);
  const HartreeState s0 = gaussian_state(g);
  auto s = evolve(s0, model, {0.5, 0.5}, 0.5, 1e-3, 1000000).back().state;
  s.u = s.u.conjugate();
  s.v = s.v.conjugate();
  s = evolve(s, model, {0.5, 0.5}, 0.5, 1e-3, 1000000).back().state;
  s.u = s.u.conjugate();
  s.v = s.v.conjugate();
  CHECK(distance(s, s0) <= 1e-6);
}

TEST_CASE("global phase is carried along") {
  const LatticeGeometry g{1, 6, 1.0};
  const auto model = LatticeModel::build(g, kGauss, kGauss, kGauss);
  const HartreeState s0 = gaussian_state(g);
  HartreeState rotated = s0;
  const Complex phase = std::polar(1.0, 0.9);
  rotated.u *= phase;
  const auto a = evolve(s0, model, {0.5, 0.5}, 0.3, 0.01, 1000);
  const auto b = evolve(rotated, model, {0.5, 0.5}, 0.3, 0.01, 1000);
  CHECK((b.back().state.u - phase * a.back().state.u).norm() < 1e-13);
  CHECK((b.back().state.v - a.back().state.v).norm() < 1e-13);
  CHECK(b.back().energy == doctest::Approx(a.back().energy).epsilon(1e-13));
}

TEST_CASE("energy of free eigenvectors and the single-site value") {
  const auto free = LatticeModel::build({1, 4, 1.0}, {}, {}, {});
  const HartreeState s{plane_wave(4, 1, 1.0), plane_wave(4, 2, 1.0), 0.0};
  CHECK(energy(s, free, {0.25, 0.75}) == doctest::Approx(0.25 * 2.0 + 0.75 * 4.0));

  const double g1 = 0.3, g2 = -1.1, g12 = 2.0;
  const auto single = LatticeModel::build({1, 1, 1.0}, {PotentialKind::gaussian, g1, 1.0},
                                          {PotentialKind::gaussian, g2, 1.0},
                                          {PotentialKind::gaussian, g12, 1.0});
  const HartreeState one{ComplexVector::Ones(1), ComplexVector::Ones(1), 0.0};
  CHECK(energy(one, single, {0.5, 0.5}) == doctest::Approx(g1 / 4 + g2 / 4 + g12 / 4));
}

TEST_CASE("energy is stationary along the exact flow") {
  // d/ds E(s + eps * rhs) at eps = 0 must vanish.
  const LatticeGeometry g{1, 6, 1.0};
  const auto model = LatticeModel::build(g, kGauss, {PotentialKind::gaussian, 0.5, 1.3},
                                         {PotentialKind::soft_coulomb, 1.0, 1.0});
  const CouplingConstants c{0.3, 0.7};
  const HartreeState s = gaussian_state(g);
  const auto d = hartree_rhs(s, model, c);
  const double eps = 1e-5;
  const HartreeState plus{s.u + eps * d.du, s.v + eps * d.dv, 0.0};
  const HartreeState minus{s.u - eps * d.du, s.v - eps * d.dv, 0.0};
  const double derivative = (energy(plus, model, c) - energy(minus, model, c)) / (2 * eps);
  CHECK(std::abs(derivative) < 1e-8);
}

TEST_CASE("mass values") {
  const LatticeGeometry g{1, 4, 0.5};
  HartreeState s = gaussian_state(g);
  auto [m1, m2] = mass(s, g.cell_volume());
  CHECK(m1 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-14));
  s.u *= 2.0;
  std::tie(m1, m2) = mass(s, g.cell_volume());
  CHECK(m1 == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("energy drift shrinks quadratically with dt") {
  const LatticeGeometry g{1, 8, 1.0};
  const auto model = LatticeModel::build(g, kGauss, kGauss, kGauss);
  const HartreeState s0 = gaussian_state(g);
  auto drift = [&](double dt) {
    const auto traj = evolve(s0, model, {0.5, 0.5}, 1.0, dt, 1);
    double d = 0.0;
    for (const auto& s : traj.samples) d = std::max(d, std::abs(s.energy - traj.front().energy));
    return d;
  };
  CHECK(drift(0.02) / drift(0.01) >= 3.5);
}

TEST_CASE("trajectory exports") {
  const LatticeGeometry g{1, 4, 1.0};
  const auto model = LatticeModel::build(g, kGauss, kGauss, kGauss);
  const auto traj = evolve(gaussian_state(g), model, {0.5, 0.5}, 0.02, 0.01, 1);
  std::ostringstream csv;
  write_trajectory_csv(traj, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "t,mass1,mass2,energy");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 3);

  const auto dir = std::filesystem::temp_directory_path() / "mixlab_test_snapshots";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "traj.c64").string();
  write_trajectory_snapshots(traj, path);
  CHECK(std::filesystem::file_size(path) == 3u * 2u * 4u * 8u);
  std::ifstream bin(path, std::ios::binary);
  float re = 0.0f, im = 0.0f;
  bin.read(reinterpret_cast<char*>(&re), 4);
  bin.read(reinterpret_cast<char*>(&im), 4);
  CHECK(re == static_cast<float>(traj.front().state.u[0].real()));
  CHECK(im == static_cast<float>(traj.front().state.u[0].imag()));
  std::ifstream hdr(path + ".hdr");
  std::string first;
  std::getline(hdr, first);
  CHECK(first == "format complex64-le");
  std::filesystem::remove_all(dir);

  CHECK_THROWS_AS(write_trajectory_snapshots(traj, "/nonexistent-dir/x.c64"), std::ios_base::failure);
}
