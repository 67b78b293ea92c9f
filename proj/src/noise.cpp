#include "iongate/noise.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <random>

namespace iongate {
namespace noise {

using constants::pi;
using constants::two_pi;

// ---------------------------------------------------------------------------
// Beam geometry
// ---------------------------------------------------------------------------

double BeamGeometry::delta_k(const SidebandAssignment& a) const {
  return fields.at(a.hi).wave_vector - fields.at(a.lo).wave_vector;
}

double BeamGeometry::delta_phi(const SidebandAssignment& a) const {
  return fields.at(a.hi).phase - fields.at(a.lo).phase;
}

int BeamGeometry::delta_k_sign(const SidebandAssignment& a) const {
  return delta_k(a) >= 0 ? 1 : -1;
}

void BeamGeometry::validate() const {
  for (const auto& a : {red, blue}) {
    if (a.hi < 0 || a.lo < 0 || a.hi >= int(fields.size()) ||
        a.lo >= int(fields.size()))
      throw PhysicsError("BeamGeometry: sideband assignment out of range");
    if (delta_k(a) == 0.0)
      throw PhysicsError("BeamGeometry: sideband pair must have a non-zero "
                         "wave-vector difference");
  }
  const double dkr = delta_k(red), dkb = delta_k(blue);
  if (configuration == GeometryConfiguration::phase_sensitive &&
      std::abs(dkr - dkb) > 1e-12 * std::abs(dkr))
    throw PhysicsError("BeamGeometry: phase_sensitive requires "
                       "Delta k_r = Delta k_b");
  if (configuration == GeometryConfiguration::phase_insensitive &&
      std::abs(dkr + dkb) > 1e-12 * std::abs(dkr))
    throw PhysicsError("BeamGeometry: phase_insensitive requires "
                       "Delta k_r = -Delta k_b");
}

namespace {

BeamGeometry two_path_geometry(const TrapConfig& trap, bool sensitive,
                               double phase_red, double phase_blue) {
  // Field 0 travels on path A; the sideband-completing fields on path B.
  // In the sensitive layout both B fields are the high-frequency partners;
  // in the insensitive layout they straddle field 0.
  BeamGeometry g;
  const double k = trap.delta_k;
  BeamField a;
  a.wave_vector = -k / 2;
  a.path = BeamPath::A;
  a.phase = 0;
  g.fields.push_back(a);

  BeamField b_red;
  b_red.wave_vector = k / 2;
  b_red.path = BeamPath::B;
  b_red.phase = sensitive ? phase_red : -phase_red;
  BeamField b_blue;
  b_blue.wave_vector = k / 2;
  b_blue.path = BeamPath::B;
  b_blue.phase = phase_blue;
  g.fields.push_back(b_red);
  g.fields.push_back(b_blue);

  if (sensitive) {
    g.red = {1, 0};   // B field higher for both sidebands
    g.blue = {2, 0};
    g.configuration = GeometryConfiguration::phase_sensitive;
  } else {
    g.red = {0, 1};   // path A higher for the red pair
    g.blue = {2, 0};
    g.configuration = GeometryConfiguration::phase_insensitive;
  }
  g.validate();
  return g;
}

}  // namespace

BeamGeometry make_phase_sensitive(const TrapConfig& trap, double phase_red,
                                  double phase_blue) {
  return two_path_geometry(trap, true, phase_red, phase_blue);
}

BeamGeometry make_phase_insensitive(const TrapConfig& trap, double phase_red,
                                    double phase_blue) {
  return two_path_geometry(trap, false, phase_red, phase_blue);
}

BeamGeometry apply_path_shift(BeamGeometry g, double delta_phi) {
  for (auto& f : g.fields)
    if (f.path == BeamPath::B) f.phase += delta_phi;
  return g;
}

// ---------------------------------------------------------------------------
// Phase propagation
// ---------------------------------------------------------------------------

std::array<SpinMotionPhases, 2> spin_motion_phases(
    const BeamGeometry& geometry, const TrapConfig& trap,
    const PathDisturbance& disturbance) {
  geometry.validate();
  const double dkr = geometry.delta_k(geometry.red);
  const double dkb = geometry.delta_k(geometry.blue);
  const double pr = geometry.delta_phi(geometry.red);
  const double pb = geometry.delta_phi(geometry.blue);
  std::array<SpinMotionPhases, 2> out;
  for (int ion = 0; ion < 2; ++ion) {
    const double x =
        trap.ion_positions[ion] + disturbance.ion_displacements[ion];
    const double r = dkr * x - pr;
    const double b = dkb * x - pb;
    out[ion].phi_s = -(r + b) / 2;
    out[ion].phi_m = (r - b) / 2;
  }
  return out;
}

double path_shift_sensitivity(const BeamGeometry& geometry) {
  auto b_side = [&](const SidebandAssignment& a) {
    const bool hi_b = geometry.fields.at(a.hi).path == BeamPath::B;
    const bool lo_b = geometry.fields.at(a.lo).path == BeamPath::B;
    return (hi_b ? 1 : 0) - (lo_b ? 1 : 0);
  };
  // phi_S = -(... - dphi_r ... - dphi_b)/2 and a path shift moves dphi of
  // each sideband by its B-side membership
  return 0.5 * (b_side(geometry.red) + b_side(geometry.blue));
}

double spacing_phase(const TrapConfig& trap) {
  const double raw =
      trap.delta_k * (trap.ion_positions[0] - trap.ion_positions[1]);
  double m = std::fmod(raw, two_pi);
  if (m < 0) m += two_pi;
  return m;
}

// ---------------------------------------------------------------------------
// Fast-gate random phase
// ---------------------------------------------------------------------------

double fast_gate_random_phase(const std::vector<double>& kick_delta_k,
                              const std::vector<double>& positions) {
  if (kick_delta_k.size() != positions.size())
    throw PhysicsError("fast_gate_random_phase: kick/trajectory length "
                       "mismatch");
  double phi = 0;
  for (size_t j = 0; j < kick_delta_k.size(); ++j)
    phi += kick_delta_k[j] * positions[j];
  return phi;
}

KickTrain refined_kick_train(int cycles, double gate_time) {
  if (cycles < 1) throw PhysicsError("refined_kick_train: cycles >= 1");
  KickTrain train;
  double binom = 1.0;
  for (int j = 0; j <= cycles; ++j) {
    train.times.push_back(gate_time * j / cycles);
    train.weights.push_back((j % 2 == 0 ? 1.0 : -1.0) * binom);
    binom = binom * (cycles - j) / (j + 1);
  }
  return train;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index) {
  // splitmix64 over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1) +
                    0xbf58476d1ce4e5b9ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

double linear_regression_slope(const std::vector<double>& logx,
                               const std::vector<double>& logy) {
  const size_t n = logx.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += logx[i];
    my += logy[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (logx[i] - mx) * (logx[i] - mx);
    sxy += (logx[i] - mx) * (logy[i] - my);
  }
  return sxy / sxx;
}

}  // namespace

ScalingResult infidelity_scaling_experiment(const ScalingExperimentSpec& spec,
                                            std::uint64_t seed) {
  if (spec.trap_omega <= 0)
    throw PhysicsError("scaling experiment: trap_omega must be positive");
  for (double s : spec.parameter_grid)
    if (s <= 0 || s >= 1)
      throw PhysicsError("scaling experiment: parameter grid must lie in "
                         "(0, 1), the validity window");

  const double omega = spec.trap_omega;
  // thermal classical oscillator: position spread sigma_x, velocity spread
  // sigma_v = omega sigma_x; v is the RMS velocity of the ensemble.
  const double sigma_x = spec.delta_k_sigma_x;  // in units of 1/delta_k
  const double sigma_v = omega * sigma_x;

  ScalingResult result;
  std::vector<std::vector<double>> per_point_infid(spec.parameter_grid.size());

  for (size_t p = 0; p < spec.parameter_grid.size(); ++p) {
    const double s = spec.parameter_grid[p];
    // s = |Delta k| v T_g with |Delta k| = 1 in these units; a frozen
    // ensemble contributes no phase at all
    const double gate_time = sigma_v > 0 ? s / sigma_v : 0.0;
    const KickTrain train = refined_kick_train(spec.cycles, gate_time);
    auto& infid = per_point_infid[p];
    infid.resize(spec.trials);
    auto run_trials = [&](int begin, int end) {
      for (int trial = begin; trial < end; ++trial) {
        std::mt19937_64 rng(derive_seed(seed, p, trial));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double x0 = sigma_x * gauss(rng);
        const double v0 = sigma_v * gauss(rng);
        double phi = 0;
        for (size_t j = 0; j < train.times.size(); ++j) {
          const double t = train.times[j];
          const double r = x0 * std::cos(omega * t) +
                           (v0 / omega) * std::sin(omega * t);
          phi += train.weights[j] * r;
        }
        // phase error on one branch of the entangled superposition
        const double sh = std::sin(phi / 2);
        infid[trial] = sh * sh;
      }
    };
    const int workers = std::max(1, spec.workers);
    if (workers == 1 || spec.trials < 2 * workers) {
      run_trials(0, spec.trials);
    } else {
      std::vector<std::future<void>> futures;
      const int chunk = (spec.trials + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const int b = w * chunk, e = std::min(spec.trials, (w + 1) * chunk);
        if (b >= e) break;
        futures.push_back(std::async(std::launch::async, run_trials, b, e));
      }
      for (auto& f : futures) f.get();
    }
    double mean = 0;
    for (double v : infid) mean += v;
    mean /= spec.trials;
    result.points.push_back({s, mean});
  }

  std::vector<double> logx, logy;
  for (const auto& pt : result.points) {
    logx.push_back(std::log(pt.parameter));
    logy.push_back(std::log(std::max(pt.mean_infidelity, 1e-300)));
  }
  result.slope = linear_regression_slope(logx, logy);

  // bootstrap over trials within each grid point
  std::vector<double> slopes;
  slopes.reserve(spec.bootstrap_resamples);
  for (int b = 0; b < spec.bootstrap_resamples; ++b) {
    std::vector<double> ly;
    for (size_t p = 0; p < per_point_infid.size(); ++p) {
      std::mt19937_64 rng(derive_seed(seed ^ 0xb00f5ull, b, p));
      std::uniform_int_distribution<int> pick(0, spec.trials - 1);
      double mean = 0;
      for (int i = 0; i < spec.trials; ++i)
        mean += per_point_infid[p][pick(rng)];
      ly.push_back(std::log(std::max(mean / spec.trials, 1e-300)));
    }
    slopes.push_back(linear_regression_slope(logx, ly));
  }
  std::sort(slopes.begin(), slopes.end());
  result.slope_ci_low = slopes[size_t(0.025 * (slopes.size() - 1))];
  result.slope_ci_high = slopes[size_t(0.975 * (slopes.size() - 1))];
  return result;
}

// ---------------------------------------------------------------------------
// Generic seeded gate sweep
// ---------------------------------------------------------------------------

namespace {

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void write_sweep_csv(const SweepStatistics& stats, std::ostream& out) {
  out << "parameter,trial,fidelity\n";
  for (size_t i = 0; i < stats.trials.size(); ++i)
    out << csv_number(stats.trials[i].parameter) << "," << i << ","
        << csv_number(stats.trials[i].fidelity) << "\n";
}

std::string sweep_summary_json(const SweepStatistics& stats) {
  std::string s = "{\n  \"trials\": ";
  s += std::to_string(stats.trials.size());
  s += ",\n  \"mean\": " + csv_number(stats.mean);
  s += ",\n  \"variance\": " + csv_number(stats.variance);
  s += "\n}\n";
  return s;
}

SweepStatistics monte_carlo_gate_sweep(
    const std::function<double(const PathDisturbance&)>& gate_fidelity,
    const std::function<PathDisturbance(std::uint64_t)>& draw, int trials,
    std::uint64_t seed, int workers) {
  SweepStatistics stats;
  stats.trials.resize(trials);

  auto run_range = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const PathDisturbance d = draw(derive_seed(seed, 0, i));
      stats.trials[i].parameter = d.delta_phi;
      stats.trials[i].fidelity = gate_fidelity(d);
    }
  };

  workers = std::max(1, workers);
  if (workers == 1 || trials < 2 * workers) {
    run_range(0, trials);
  } else {
    std::vector<std::future<void>> futures;
    const int chunk = (trials + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int b = w * chunk, e = std::min(trials, (w + 1) * chunk);
      if (b >= e) break;
      futures.push_back(std::async(std::launch::async, run_range, b, e));
    }
    for (auto& f : futures) f.get();
  }

  double mean = 0;
  for (const auto& t : stats.trials) mean += t.fidelity;
  mean /= std::max(trials, 1);
  double var = 0;
  for (const auto& t : stats.trials)
    var += (t.fidelity - mean) * (t.fidelity - mean);
  stats.mean = mean;
  stats.variance = trials > 1 ? var / (trials - 1) : 0.0;
  return stats;
}

}  // namespace noise
}  // namespace iongate
