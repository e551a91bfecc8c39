#include "mixlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <tuple>

#include <json.hpp>

#include "mixlab/hartree.hpp"
#include "mixlab/parallel.hpp"

namespace mixlab {
namespace {

using Clock = std::chrono::steady_clock;

struct HartreeReference {
  std::vector<HartreeState> states;
  std::vector<double> mass_drift;
  std::vector<double> energy_drift;
};

HartreeReference hartree_reference(const RunConfig& config, const LatticeModel& model,
                                   const ComplexVector& u, const ComplexVector& v,
                                   const std::vector<double>& times) {
  HartreeReference ref;
  const HartreeState initial{u, v, 0.0};
  ref.states = evolve_to_times(initial, model, config.couplings, times, config.time.dt);
  const double hd = model.cell_volume();
  const double e0 = energy(initial, model, config.couplings);
  for (const auto& s : ref.states) {
    const auto [m1, m2] = mass(s, hd);
    ref.mass_drift.push_back(std::max(std::abs(m1 - 1.0), std::abs(m2 - 1.0)));
    ref.energy_drift.push_back(std::abs(energy(s, model, config.couplings) - e0));
  }
  return ref;
}

TruncatedFockState embed_sector(const SectorState& s) {
  TruncatedFockState state(s.modes, s.n1, s.n2);
  state.sector(s.n1, s.n2).coefficients = s.coefficients;
  state.t = s.t;
  return state;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::pair<double, double>> distances_at(std::span<const ConvergenceRecord> records,
                                                    double t) {
  std::map<int, double> by_n;
  for (const auto& r : records)
    if (r.n1 == r.n2 && std::abs(r.t - t) < 1e-9) by_n[r.n1] = r.trace_distance;
  return {by_n.begin(), by_n.end()};
}

}  // namespace

std::string to_string(Pipeline p) { return p == Pipeline::exact ? "exact" : "coherent"; }

ExperimentResult run_fixed_sector_experiment(const RunConfig& config) {
  config.validate();
  const LatticeModel model = build_model(config);
  const auto [u, v] = initial_orbitals(config);
  const auto times = config.sample_times();
  const HartreeReference ref = hartree_reference(config, model, u, v, times);
  const double hd = model.cell_volume();
  const int modes = model.sites();

  ExperimentResult result;
  std::vector<std::vector<ConvergenceRecord>> per_pair(config.pairs.size());
  std::vector<std::string> skip_reason(config.pairs.size());

  parallel_for(config.pairs.size(), config.threads, [&](std::size_t k) {
    const auto [n1, n2] = config.pairs[k];
    const auto dim = sector_dimension(modes, n1) * sector_dimension(modes, n2);
    if (dim > config.max_sector_dimension) {
      skip_reason[k] = "pair (" + std::to_string(n1) + ", " + std::to_string(n2) +
                       ") skipped: sector dimension " + std::to_string(dim) + " exceeds " +
                       std::to_string(config.max_sector_dimension);
      return;
    }
    const auto start = Clock::now();
    const SectorPropagator prop(
        assemble_sector_hamiltonian(model, n1, n2, n1, n2, config.max_sector_dimension),
        config.propagator);
    SectorState state = product_sector_state(u, v, n1, n2, hd);
    double now = 0.0;
    for (std::size_t s = 0; s < times.size(); ++s) {
      prop.advance(state.coefficients, times[s] - now);
      now = times[s];
      state.t = now;
      const ReducedDensity gamma = reduced_density_sector(state);
      const ReducedDensity proj = hartree_projector(ref.states[s].u, ref.states[s].v, hd);
      const FluctuationMoments mom =
          fluctuation_moments(embed_sector(state), ref.states[s].u, ref.states[s].v, n1, n2, hd);

      ConvergenceRecord rec;
      rec.pipeline = Pipeline::exact;
      rec.n1 = n1;
      rec.n2 = n2;
      rec.t = now;
      rec.trace_distance = trace_distance(gamma, proj);
      rec.bounds = part1_bound_terms(mom, n1, n2);
      rec.bounds.trace_distance = rec.trace_distance;
      rec.p_sum = rec.bounds.sum;
      rec.m10 = mom.m10;
      rec.m01 = mom.m01;
      rec.m11 = mom.m11;
      rec.mass_drift =
          std::max(ref.mass_drift[s], std::abs(state.coefficients.squaredNorm() - 1.0));
      rec.energy_drift = ref.energy_drift[s];
      rec.cutoff1 = n1;
      rec.cutoff2 = n2;
      rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
      per_pair[k].push_back(rec);
    }
  });

  for (std::size_t k = 0; k < config.pairs.size(); ++k) {
    if (!skip_reason[k].empty()) result.skipped.push_back(skip_reason[k]);
    result.records.insert(result.records.end(), per_pair[k].begin(), per_pair[k].end());
  }
  sort_records(result.records);
  return result;
}

ExperimentResult run_coherent_experiment(const RunConfig& config) {
  config.validate();
  const LatticeModel model = build_model(config);
  const auto [u, v] = initial_orbitals(config);
  const auto times = config.sample_times();
  const HartreeReference ref = hartree_reference(config, model, u, v, times);
  const double hd = model.cell_volume();
  const auto& means = config.coherent.mean_numbers.empty() ? config.pairs
                                                           : config.coherent.mean_numbers;

  ExperimentResult result;
  for (const auto& [n1, n2] : means) {
    const int cut1 = config.coherent.cutoff1 > 0 ? config.coherent.cutoff1 : default_cutoff(n1);
    const int cut2 = config.coherent.cutoff2 > 0 ? config.coherent.cutoff2 : default_cutoff(n2);
    const auto start = Clock::now();
    TruncatedFockState state =
        coherent_state(std::sqrt(static_cast<double>(n1)) * u,
                       std::sqrt(static_cast<double>(n2)) * v, cut1, cut2, hd,
                       config.coherent.deficit_bound);
    const double norm0 = state.norm_squared();
    // Sector propagators are built once and parallelized internally.
    const FockPropagator prop(model, n1, n2, cut1, cut2, config.propagator, config.threads);
    double now = 0.0;
    for (std::size_t s = 0; s < times.size(); ++s) {
      prop.advance(state, times[s] - now);
      now = times[s];
      const ReducedDensity gamma = reduced_density_fock(state);
      const ReducedDensity proj = hartree_projector(ref.states[s].u, ref.states[s].v, hd);
      const FluctuationMoments mom =
          fluctuation_moments(state, ref.states[s].u, ref.states[s].v, n1, n2, hd);

      ConvergenceRecord rec;
      rec.pipeline = Pipeline::coherent;
      rec.n1 = n1;
      rec.n2 = n2;
      rec.t = now;
      rec.trace_distance = trace_distance(gamma, proj);
      rec.bounds = part1_bound_terms(mom, n1, n2);
      rec.bounds.trace_distance = rec.trace_distance;
      rec.p_sum = rec.bounds.sum;
      rec.m10 = mom.m10;
      rec.m01 = mom.m01;
      rec.m11 = mom.m11;
      rec.mass_drift = std::max(ref.mass_drift[s], std::abs(state.norm_squared() - norm0));
      rec.energy_drift = ref.energy_drift[s];
      rec.truncation_deficit = state.deficit();
      rec.cutoff1 = cut1;
      rec.cutoff2 = cut2;
      rec.deficit_flag = state.deficit_flag;
      rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
      result.records.push_back(rec);
    }
    if (state.deficit_flag)
      result.skipped.push_back("pair (" + std::to_string(n1) + ", " + std::to_string(n2) +
                               ") flagged: truncation deficit " + format_double(state.deficit()) +
                               " above bound " + format_double(config.coherent.deficit_bound));
  }
  sort_records(result.records);
  return result;
}

RateFit fit_rate(std::span<const ConvergenceRecord> records, double t) {
  RateFit fit;
  fit.t = t;
  const auto points = distances_at(records, t);
  for (const auto& [n, d] : points) fit.n_values.push_back(static_cast<int>(n));
  if (points.size() < 2) {
    fit.reason = "need at least two distinct N";
    return fit;
  }
  for (const auto& [n, d] : points)
    if (!(d > 0.0)) {
      fit.reason = "non-positive distance at N = " + std::to_string(static_cast<int>(n));
      return fit;
    }
  const double k = static_cast<double>(points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [n, d] : points) {
    const double x = std::log(n);
    const double y = std::log(d);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = k * sxx - sx * sx;
  fit.slope = (k * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / k;
  double ss = 0.0;
  for (const auto& [n, d] : points) {
    const double r = std::log(d) - (fit.intercept + fit.slope * std::log(n));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / k);
  fit.valid = true;
  return fit;
}

EnvelopeCheck check_envelope(std::span<const ConvergenceRecord> records, double t_a, double t_b,
                             double slack) {
  EnvelopeCheck check;
  const auto at_a = distances_at(records, t_a);
  const auto at_b = distances_at(records, t_b);
  if (at_a.empty() || at_b.empty() || at_a.front().first != at_b.front().first) {
    check.reason = "no common calibration run at both times";
    return check;
  }
  const double n0 = at_a.front().first;
  const double da = at_a.front().second;
  const double db = at_b.front().second;
  if (!(da > 0.0) || !(db > 0.0) || t_a == t_b) {
    check.reason = "calibration distances must be positive at two distinct times";
    return check;
  }
  check.calibration_n = static_cast<int>(n0);
  check.growth = std::log(db / da) / (t_b - t_a);
  const double rate0 = 2.0 / std::sqrt(n0);
  check.constant = da / (std::exp(check.growth * t_a) * rate0);
  check.valid = true;
  check.passed = true;
  for (const auto& r : records) {
    if (r.n1 <= n0 && r.n2 <= n0) continue;
    const double envelope = check.constant * std::exp(check.growth * r.t) *
                            (1.0 / std::sqrt(static_cast<double>(r.n1)) +
                             1.0 / std::sqrt(static_cast<double>(r.n2)));
    const double ratio = r.trace_distance / (slack * envelope);
    check.worst_ratio = std::max(check.worst_ratio, ratio);
    if (ratio > 1.0) check.passed = false;
  }
  return check;
}

double truncation_slack(const ConvergenceRecord& record) {
  return 10.0 * std::max(record.truncation_deficit, 0.0) * (record.cutoff1 + 1) *
         (record.cutoff2 + 1);
}

void sort_records(std::vector<ConvergenceRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.pipeline, a.n1, a.n2, a.t) < std::tie(b.pipeline, b.n1, b.n2, b.t);
  });
}

std::string records_csv(std::span<const ConvergenceRecord> records) {
  std::string out =
      "pipeline,N1,N2,t,trace_distance,p_sum,m10,m01,m11,mass_drift,energy_drift,"
      "truncation_deficit\n";
  for (const auto& r : records) {
    out += to_string(r.pipeline) + ',' + std::to_string(r.n1) + ',' + std::to_string(r.n2);
    for (double x : {r.t, r.trace_distance, r.p_sum, r.m10, r.m01, r.m11, r.mass_drift,
                     r.energy_drift, r.truncation_deficit})
      out += ',' + format_double(x);
    out += '\n';
  }
  return out;
}

std::string bounds_csv(std::span<const ConvergenceRecord> records) {
  std::string out = "pipeline,N1,N2,t,p1,p2,p3,p4,p5,p6,p7,p8,p9,p_sum,trace_distance\n";
  for (const auto& r : records) {
    out += to_string(r.pipeline) + ',' + std::to_string(r.n1) + ',' + std::to_string(r.n2) +
           ',' + format_double(r.t);
    for (double p : r.bounds.p) out += ',' + format_double(p);
    out += ',' + format_double(r.bounds.sum) + ',' + format_double(r.trace_distance) + '\n';
  }
  return out;
}

std::vector<RateFit> fit_rates(std::span<const ConvergenceRecord> records,
                               std::span<const double> times) {
  std::vector<RateFit> fits;
  for (Pipeline p : {Pipeline::exact, Pipeline::coherent}) {
    std::vector<ConvergenceRecord> subset;
    for (const auto& r : records)
      if (r.pipeline == p) subset.push_back(r);
    if (subset.empty()) continue;
    for (double t : times) {
      RateFit fit = fit_rate(subset, t);
      fit.pipeline = p;
      fits.push_back(std::move(fit));
    }
  }
  return fits;
}

std::string timing_csv(std::span<const ConvergenceRecord> records) {
  std::string out = "pipeline,N1,N2,t,wall_time\n";
  for (const auto& r : records)
    out += to_string(r.pipeline) + ',' + std::to_string(r.n1) + ',' + std::to_string(r.n2) +
           ',' + format_double(r.t) + ',' + format_double(r.wall_time) + '\n';
  return out;
}

std::string summary_json(std::span<const ConvergenceRecord> records,
                         std::span<const RateFit> fits, const RunConfig& config,
                         std::span<const std::string> skipped) {
  using nlohmann::json;
  json j;
  j["version"] = MIXLAB_VERSION;
  j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                       std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  j["seed"] = config.seed;
  j["config"] = json::parse(config_to_json(config));
  j["runs"] = records.size();
  j["skipped"] = json::array();
  for (const auto& s : skipped) j["skipped"].push_back(s);
  j["fits"] = json::array();
  for (const auto& f : fits) {
    json jf = {{"pipeline", to_string(f.pipeline)}, {"t", f.t}, {"valid", f.valid}, {"n_values", f.n_values}};
    if (f.valid) {
      jf["slope"] = f.slope;
      jf["intercept"] = f.intercept;
      jf["residual"] = f.residual;
    } else {
      jf["reason"] = f.reason;
    }
    j["fits"].push_back(jf);
  }
  return j.dump(2) + "\n";
}

void emit_report(std::vector<ConvergenceRecord> records, std::span<const RateFit> fits,
                 const RunConfig& config, std::span<const std::string> skipped,
                 const std::filesystem::path& directory) {
  sort_records(records);
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw std::ios_base::failure("cannot create directory " + directory.string());
  auto write = [&](const std::string& name, const std::string& content) {
    const auto path = directory / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open " + path.string());
    out << content;
    if (!out) throw std::ios_base::failure("write failed for " + path.string());
  };
  write("records.csv", records_csv(records));
  write("bounds.csv", bounds_csv(records));
  write("timing.csv", timing_csv(records));
  write("summary.json", summary_json(records, fits, config, skipped));
}

}  // namespace mixlab
