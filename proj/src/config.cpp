#include "mixlab/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mixlab/hartree.hpp"

namespace mixlab {
namespace {

using nlohmann::json;

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

PotentialSpec parse_potential(const json& j) {
  PotentialSpec p;
  p.kind = potential_kind_from_string(j.value("kind", std::string("zero")));
  read(j, "strength", p.strength);
  read(j, "range", p.range);
  return p;
}

json potential_json(const PotentialSpec& p) {
  return {{"kind", to_string(p.kind)}, {"strength", p.strength}, {"range", p.range}};
}

OrbitalSpec parse_orbital(const json& j) {
  OrbitalSpec o;
  read(j, "center", o.center);
  read(j, "width", o.width);
  read(j, "wavenumber", o.wavenumber);
  return o;
}

json orbital_json(const OrbitalSpec& o) {
  return {{"center", o.center}, {"width", o.width}, {"wavenumber", o.wavenumber}};
}

std::vector<ParticlePair> parse_pairs(const json& j) {
  std::vector<ParticlePair> pairs;
  for (const auto& item : j) {
    if (!item.is_array() || item.size() != 2)
      throw ConfigError("particle-number pairs must be two-element arrays");
    pairs.push_back({item[0].get<int>(), item[1].get<int>()});
  }
  return pairs;
}

json pairs_json(const std::vector<ParticlePair>& pairs) {
  json out = json::array();
  for (const auto& p : pairs) out.push_back({p.n1, p.n2});
  return out;
}

}  // namespace

int default_cutoff(int n) {
  return n + static_cast<int>(std::ceil(4.0 * std::sqrt(static_cast<double>(n)) + 4.0));
}

void RunConfig::validate() const {
  lattice.validate();
  v1.validate();
  v2.validate();
  v12.validate();
  couplings.validate();
  propagator.validate();
  if (!(time.dt > 0.0)) throw ConfigError("time.dt must be positive");
  if (!(time.t_final >= 0.0)) throw ConfigError("time.t_final must be nonnegative");
  if (time.stride < 1) throw ConfigError("time.stride must be positive");
  double previous = -1.0;
  for (double t : time.samples) {
    if (!(t >= 0.0) || t > time.t_final + 1e-12)
      throw ConfigError("sample times must lie in [0, t_final]");
    if (t <= previous) throw ConfigError("sample times must be strictly increasing");
    previous = t;
  }
  if (threads < 1) throw ConfigError("threads must be positive");
  if (!(orbital_noise >= 0.0)) throw ConfigError("orbital noise must be nonnegative");
  if (orbital_u.width <= 0.0 || orbital_v.width <= 0.0)
    throw ConfigError("orbital widths must be positive");
  if (!(coherent.deficit_bound > 0.0)) throw ConfigError("deficit bound must be positive");
  validate_sequences(pairs, couplings, tolerance_d);
  const auto& means = coherent.mean_numbers.empty() ? pairs : coherent.mean_numbers;
  for (const auto& p : means) {
    if (p.n1 < 1 || p.n2 < 1) throw ConfigError("coherent mean numbers must be positive");
    if ((coherent.cutoff1 > 0 && coherent.cutoff1 < default_cutoff(p.n1)) ||
        (coherent.cutoff2 > 0 && coherent.cutoff2 < default_cutoff(p.n2)))
      throw ConfigError("Fock cutoffs (" + std::to_string(coherent.cutoff1) + ", " +
                        std::to_string(coherent.cutoff2) + ") are below N + 4 sqrt(N) + 4 for (" +
                        std::to_string(p.n1) + ", " + std::to_string(p.n2) + ")");
  }
}

std::vector<double> RunConfig::sample_times() const {
  if (time.samples.empty()) return {time.t_final};
  return time.samples;
}

RunConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    if (j.contains("lattice")) {
      const auto& l = j["lattice"];
      read(l, "dimension", c.lattice.dimension);
      read(l, "sites_per_axis", c.lattice.sites_per_axis);
      read(l, "spacing", c.lattice.spacing);
    }
    if (j.contains("potentials")) {
      const auto& p = j["potentials"];
      if (p.contains("v1")) c.v1 = parse_potential(p["v1"]);
      if (p.contains("v2")) c.v2 = parse_potential(p["v2"]);
      if (p.contains("v12")) c.v12 = parse_potential(p["v12"]);
    }
    if (j.contains("couplings")) {
      read(j["couplings"], "c1", c.couplings.c1);
      read(j["couplings"], "c2", c.couplings.c2);
    }
    if (j.contains("sequence")) {
      const auto& s = j["sequence"];
      if (s.contains("pairs")) c.pairs = parse_pairs(s["pairs"]);
      read(s, "tolerance_d", c.tolerance_d);
    }
    if (j.contains("orbitals")) {
      const auto& o = j["orbitals"];
      if (o.contains("u")) c.orbital_u = parse_orbital(o["u"]);
      if (o.contains("v")) c.orbital_v = parse_orbital(o["v"]);
      read(o, "noise", c.orbital_noise);
    }
    if (j.contains("time")) {
      const auto& t = j["time"];
      read(t, "t_final", c.time.t_final);
      read(t, "dt", c.time.dt);
      read(t, "stride", c.time.stride);
      read(t, "samples", c.time.samples);
    }
    if (j.contains("coherent")) {
      const auto& k = j["coherent"];
      if (k.contains("mean_numbers")) c.coherent.mean_numbers = parse_pairs(k["mean_numbers"]);
      read(k, "cutoff1", c.coherent.cutoff1);
      read(k, "cutoff2", c.coherent.cutoff2);
      read(k, "deficit_bound", c.coherent.deficit_bound);
    }
    if (j.contains("propagator")) {
      const auto& p = j["propagator"];
      if (p.contains("method"))
        c.propagator.method = propagator_method_from_string(p["method"].get<std::string>());
      read(p, "krylov_dim", c.propagator.krylov_dim);
      read(p, "substep", c.propagator.substep);
      read(p, "dense_threshold", c.propagator.dense_threshold);
      read(p, "krylov_tolerance", c.propagator.krylov_tolerance);
      read(p, "max_retries", c.propagator.max_retries);
    }
    read(j, "max_sector_dimension", c.max_sector_dimension);
    if (j.contains("experiments")) {
      read(j["experiments"], "exact", c.run_exact);
      read(j["experiments"], "coherent", c.run_coherent);
    }
    if (j.contains("output")) {
      read(j["output"], "directory", c.output_directory);
      read(j["output"], "snapshots", c.write_snapshots);
    }
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["lattice"] = {{"dimension", c.lattice.dimension},
                  {"sites_per_axis", c.lattice.sites_per_axis},
                  {"spacing", c.lattice.spacing}};
  j["potentials"] = {{"v1", potential_json(c.v1)},
                     {"v2", potential_json(c.v2)},
                     {"v12", potential_json(c.v12)}};
  j["couplings"] = {{"c1", c.couplings.c1}, {"c2", c.couplings.c2}};
  j["sequence"] = {{"pairs", pairs_json(c.pairs)}, {"tolerance_d", c.tolerance_d}};
  j["orbitals"] = {{"u", orbital_json(c.orbital_u)},
                   {"v", orbital_json(c.orbital_v)},
                   {"noise", c.orbital_noise}};
  j["time"] = {{"t_final", c.time.t_final},
               {"dt", c.time.dt},
               {"stride", c.time.stride},
               {"samples", c.time.samples}};
  j["coherent"] = {{"mean_numbers", pairs_json(c.coherent.mean_numbers)},
                   {"cutoff1", c.coherent.cutoff1},
                   {"cutoff2", c.coherent.cutoff2},
                   {"deficit_bound", c.coherent.deficit_bound}};
  j["propagator"] = {{"method", to_string(c.propagator.method)},
                     {"krylov_dim", c.propagator.krylov_dim},
                     {"substep", c.propagator.substep},
                     {"dense_threshold", c.propagator.dense_threshold},
                     {"krylov_tolerance", c.propagator.krylov_tolerance},
                     {"max_retries", c.propagator.max_retries}};
  j["max_sector_dimension"] = c.max_sector_dimension;
  j["experiments"] = {{"exact", c.run_exact}, {"coherent", c.run_coherent}};
  j["output"] = {{"directory", c.output_directory}, {"snapshots", c.write_snapshots}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j.dump(2);
}

LatticeModel build_model(const RunConfig& config) {
  return LatticeModel::build(config.lattice, config.v1, config.v2, config.v12);
}

std::pair<ComplexVector, ComplexVector> initial_orbitals(const RunConfig& config) {
  const auto& g = config.lattice;
  ComplexVector u = gaussian_orbital(g, config.orbital_u.center, config.orbital_u.width,
                                     config.orbital_u.wavenumber);
  ComplexVector v = gaussian_orbital(g, config.orbital_v.center, config.orbital_v.width,
                                     config.orbital_v.wavenumber);
  if (config.orbital_noise > 0.0) {
    // Uniform draws from the raw engine output keep the sequence identical across
    // standard libraries.
    std::mt19937_64 engine(config.seed);
    auto uniform = [&engine] { return static_cast<double>(engine() >> 11) * 0x1.0p-53 - 0.5; };
    for (ComplexVector* w : {&u, &v}) {
      for (Eigen::Index i = 0; i < w->size(); ++i)
        (*w)[i] += config.orbital_noise * Complex(uniform(), uniform());
      *w /= std::sqrt(g.cell_volume() * w->squaredNorm());
    }
  }
  return {u, v};
}

}  // namespace mixlab
