#pragma once

// Optical-path and positional disturbance propagation into gate phases, and
// Monte-Carlo infidelity experiments (including the fast-gate random-phase
// scaling law).

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "iongate/dynamics.hpp"

namespace iongate {
namespace noise {

using dynamics::TrapConfig;

// ---------------------------------------------------------------------------
// Beam geometry
// ---------------------------------------------------------------------------

enum class BeamPath { A, B };
enum class GeometryConfiguration { phase_sensitive, phase_insensitive, custom };

struct BeamField {
  double wave_vector = 0;  // 1/m, signed along x
  double frequency = 0;    // rad/s
  double phase = 0;        // rad
  BeamPath path = BeamPath::A;
};

// A sideband is driven by a pair of fields; `hi` is the higher-frequency
// field, so Delta k = k_hi - k_lo and Delta phi = phi_hi - phi_lo.
struct SidebandAssignment {
  int hi = 0;
  int lo = 0;
};

struct BeamGeometry {
  std::vector<BeamField> fields;
  SidebandAssignment red;
  SidebandAssignment blue;
  GeometryConfiguration configuration = GeometryConfiguration::custom;

  double delta_k(const SidebandAssignment& a) const;
  double delta_phi(const SidebandAssignment& a) const;
  int delta_k_sign(const SidebandAssignment& a) const;

  // Validates field indices, non-zero wave-vector differences, and the
  // configuration's Delta k_r / Delta k_b relation.
  void validate() const;
};

// Standard two-path geometries. Path A carries one field with wave-vector
// +k/2, path B carries the sideband-completing fields at -k/2, so every
// assigned pair has |Delta k| = delta_k of the trap.
BeamGeometry make_phase_sensitive(const TrapConfig& trap, double phase_red = 0,
                                  double phase_blue = 0);
BeamGeometry make_phase_insensitive(const TrapConfig& trap,
                                    double phase_red = 0,
                                    double phase_blue = 0);

// Path-length disturbance: a phase shift on every path-B field plus optional
// ion displacements.
struct PathDisturbance {
  double delta_phi = 0;                      // rad, on beam path B
  std::array<double, 2> ion_displacements{0.0, 0.0};  // m
};

BeamGeometry apply_path_shift(BeamGeometry g, double delta_phi);

// ---------------------------------------------------------------------------
// Phase propagation
// ---------------------------------------------------------------------------

struct SpinMotionPhases {
  double phi_s = 0;  // spin phase
  double phi_m = 0;  // motion phase
};

// phi_S,i = -(dk_r X_i - dphi_r + dk_b X_i - dphi_b)/2
// phi_M,i = +(dk_r X_i - dphi_r - dk_b X_i + dphi_b)/2
std::array<SpinMotionPhases, 2> spin_motion_phases(
    const BeamGeometry& geometry, const TrapConfig& trap,
    const PathDisturbance& disturbance = {});

// Exact derivative of the spin phase with respect to a path-B shift,
// computed from the geometry's pair assignments: 1 for the sensitive
// configuration, 0 for the insensitive one.
double path_shift_sensitivity(const BeamGeometry& geometry);

// Delta k (X_01 - X_02) mod 2 pi, in [0, 2 pi); zero (or 2 pi) means equal
// force phase on both ions.
double spacing_phase(const TrapConfig& trap);

// ---------------------------------------------------------------------------
// Fast-gate random phase
// ---------------------------------------------------------------------------

// phi_t = sum_j Delta k_j . r_j over the sampled ion positions at kick times.
double fast_gate_random_phase(const std::vector<double>& kick_delta_k,
                              const std::vector<double>& positions);

// Kick train with n refinement cycles: binomial weights (-1)^j C(n, j) at
// equally spaced times over the gate time, so position moments up to order
// n-1 cancel.
struct KickTrain {
  std::vector<double> times;    // s, within [0, gate_time]
  std::vector<double> weights;  // multiples of the base delta_k, sum = 0
};
KickTrain refined_kick_train(int cycles, double gate_time);

struct ScalingPoint {
  double parameter = 0;       // |Delta k| v T_g
  double mean_infidelity = 0;
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  double slope = 0;        // log-log regression slope
  double slope_ci_low = 0;  // bootstrap 95% interval
  double slope_ci_high = 0;
};

struct ScalingExperimentSpec {
  int cycles = 1;             // refinement cycles n
  std::vector<double> parameter_grid;  // |Delta k| v T_g values, each < 1
  int trials = 10000;
  double trap_omega = 0;      // rad/s, local oscillation frequency
  double delta_k_sigma_x = 10.0;  // Delta k times thermal position spread
  int bootstrap_resamples = 200;
  int workers = 1;  // trial streams are derived per index, so the result
                    // does not depend on the split
};

// Monte-Carlo over classical thermal harmonic trajectories; v is the RMS
// velocity of the sampled ensemble. Deterministic per seed.
ScalingResult infidelity_scaling_experiment(const ScalingExperimentSpec& spec,
                                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Generic seeded gate sweep
// ---------------------------------------------------------------------------

struct SweepTrial {
  double parameter = 0;
  double fidelity = 0;
};

struct SweepStatistics {
  std::vector<SweepTrial> trials;
  double mean = 0;
  double variance = 0;
};

// Runs `trials` evaluations of gate_fidelity(disturbance drawn per trial).
// Per-trial RNG streams are derived from (seed, trial index) so results are
// independent of execution order; `workers` only parallelizes.
SweepStatistics monte_carlo_gate_sweep(
    const std::function<double(const PathDisturbance&)>& gate_fidelity,
    const std::function<PathDisturbance(std::uint64_t seed)>& draw,
    int trials, std::uint64_t seed, int workers = 1);

// Deterministic per-trial seed stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index);

// Sweep emission: CSV rows (parameter, trial, fidelity) plus a JSON summary.
void write_sweep_csv(const SweepStatistics& stats, std::ostream& out);
std::string sweep_summary_json(const SweepStatistics& stats);

}  // namespace noise
}  // namespace iongate
