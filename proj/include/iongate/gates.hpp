#pragma once

// The four two-qubit gate schemes as executable schedules over the dynamics
// layer: Cirac-Zoller (phase gate and CNOT), the sigma_z and sigma_phi
// spin-dependent-force gates, and the fast kick gate.
//
// Truth tables are 4x4 matrices whose column k is the output spin amplitude
// vector for computational input k (spin index 2*s1 + s2, up = 0), defined up
// to one global phase per table.

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "iongate/dynamics.hpp"
#include "iongate/noise.hpp"

namespace iongate {
namespace gates {

using dynamics::FockBasis;
using dynamics::HamiltonianModel;
using dynamics::SpinMotionState;
using dynamics::TrapConfig;

// ---------------------------------------------------------------------------
// Truth tables and comparison
// ---------------------------------------------------------------------------

using TruthTable = Matrix;  // 4x4

TruthTable cz_phase_table();             // -1 on |down down>
TruthTable cz_cnot_table(double phi);    // exact composition of the rotations
                                         // with the phase gate
TruthTable sigma_z_table();              // i on anti-aligned states
// sigma_phi table in the sigma_z basis for per-ion spin phases.
TruthTable sigma_phi_table(double phi_s1, double phi_s2);

// |Tr(ideal^dag computed) / 4|^2; equals 1 iff computed = e^{i gamma} ideal.
// The ideal table must be unitary; leakage in `computed` lowers the value.
double table_fidelity(const TruthTable& computed, const TruthTable& ideal);
// Normalized overlap |Tr(a^dag b)|^2 / (Tr(a^dag a) Tr(b^dag b)) for
// comparing two computed tables; 1 iff they agree up to one global factor.
double table_agreement(const TruthTable& a, const TruthTable& b);
// Per-column |<ideal_k|computed_k>|^2.
std::array<double, 4> row_fidelities(const TruthTable& computed,
                                     const TruthTable& ideal);

// Runs the executor on the four computational inputs (x) |0,0> and projects
// the outputs onto the motional ground state.
struct GateRun {
  TruthTable table;
  std::array<double, 4> purity;       // reduced spin purity per input
  std::array<double, 4> ground_overlap;  // motional restoration per input
  hilbert::TruncationReport truncation;
};
GateRun run_truth_table(
    const std::function<SpinMotionState(const SpinMotionState&)>& gate,
    const FockBasis& basis);

// ---------------------------------------------------------------------------
// Carrier pulse (single-qubit rotation)
// ---------------------------------------------------------------------------

// R(theta, phi) on (up, down): for theta = pi/2,
// alpha|up> + beta|down> -> [(alpha + e^{-i phi} beta)|up>
//                            + (beta - e^{i phi} alpha)|down>]/sqrt(2).
Matrix carrier_rotation(double theta, double phi);

SpinMotionState carrier_pulse(const SpinMotionState& state, double theta,
                              double phi, int target_ion);

// ---------------------------------------------------------------------------
// Cirac-Zoller
// ---------------------------------------------------------------------------

struct CiracZollerParams {
  int mode = 1;          // cooled collective mode
  double rabi = 1.0e5;   // sideband drive strength Omega, rad/s
  double ground_tol = 1e-6;  // allowed initial population outside |0_nu>
};

// Blue-sideband pi on ion 1, 2pi auxiliary flip on |down_2, n=1>, reversed
// blue-sideband pi on ion 1. Requires the driven mode near |0>.
SpinMotionState cirac_zoller_phase_gate(const SpinMotionState& state,
                                        const TrapConfig& trap,
                                        const CiracZollerParams& params = {});

// Carrier pi/2 (phase phi) on ion 2, phase gate, carrier -pi/2 (phase phi).
SpinMotionState cirac_zoller_cnot(const SpinMotionState& state,
                                  const TrapConfig& trap, double phi,
                                  const CiracZollerParams& params = {});

// ---------------------------------------------------------------------------
// sigma_z gate
// ---------------------------------------------------------------------------

struct SigmaZGateParams {
  double detuning = 0;       // delta > 0, rad/s; gate time T = 2 pi / delta
  double rabi_up = 0;        // per-spin force couplings, rad/s
  double rabi_down = 0;
  double optical_phase = 0;  // Delta phi
  int mode = 2;
  bool exploratory = false;  // skip the spacing precondition
  double spacing_tol = 1e-6;
};

// |rabi_up - rabi_down| that makes the round-trip phase pi/2.
double sigma_z_required_rabi_diff(const TrapConfig& trap, double detuning,
                                  int mode = 2);

SpinMotionState sigma_z_gate(const TrapConfig& trap,
                             const SigmaZGateParams& params,
                             const SpinMotionState& state);

// Analytic displacement-picture truth table for the same drive (vacuum
// Debye-Waller level): diag(e^{i Phi_branch}).
TruthTable sigma_z_gate_analytic(const TrapConfig& trap,
                                 const SigmaZGateParams& params);

// ---------------------------------------------------------------------------
// sigma_phi gate
// ---------------------------------------------------------------------------

struct SigmaPhiGateParams {
  double detuning = 0;   // delta > 0
  double rabi = 0;       // Omega, equal on both ions, rad/s
  double phase_red = 0;  // Delta phi_r
  double phase_blue = 0;
  int sign_red = 1;      // sign of Delta k_r
  int sign_blue = 1;
  int mode = 2;
  bool exploratory = false;
  double force_phase_tol = 1e-6;
};

double sigma_phi_required_rabi(const TrapConfig& trap, double detuning,
                               int mode = 2);

// Per-ion effective spin phase psi_i and complex force coupling f_i (the
// coefficient of a^dag e^{i delta t} acting on the driven-mode vacuum for
// the +1 eigenstate of sigma_{psi_i}).
struct EffectiveSpinForce {
  double psi = 0;
  complexd f = 0;
};
std::array<EffectiveSpinForce, 2> sigma_phi_effective_phases(
    const TrapConfig& trap, const SigmaPhiGateParams& params);

SpinMotionState sigma_phi_gate(const TrapConfig& trap,
                               const SigmaPhiGateParams& params,
                               const SpinMotionState& state);

SigmaPhiGateParams sigma_phi_params_from_geometry(
    const noise::BeamGeometry& geometry, double detuning, double rabi,
    int mode = 2);

// Analytic table: (Q1 x Q2) diag(e^{i Phi_branch}) (Q1 x Q2)^dag.
TruthTable sigma_phi_gate_analytic(const TrapConfig& trap,
                                   const SigmaPhiGateParams& params);

// ---------------------------------------------------------------------------
// Ramsey-wrapped sigma_phi gate
// ---------------------------------------------------------------------------

enum class RotationReference { shared_path, copropagating };

// pi/2 rotations on both ions, sigma_phi gate, -pi/2 rotations back. The
// rotation phases follow the geometry's spin phase, so the wrapped table is
// independent of the injected path shift. Rejects a reference that cannot
// track the geometry's phase response.
GateRun ramsey_wrapped_gate(const TrapConfig& trap,
                            const noise::BeamGeometry& geometry,
                            double detuning, double rabi, double path_shift,
                            RotationReference reference,
                            const FockBasis& basis);

// ---------------------------------------------------------------------------
// Fast kick gate
// ---------------------------------------------------------------------------

struct KickEvent {
  double time = 0;       // s
  int delta_k_sign = 1;  // direction of Delta k_j
  double eta_1 = 0;      // Lamb-Dicke parameters of this kick
  double eta_2 = 0;
  // spin selector fixed: |down> components receive the kick
};

struct FreeEvolution {
  double duration = 0;
};

struct DriveStep {
  dynamics::DriveSpec drive;
  double duration = 0;
};

using ScheduleStep = std::variant<DriveStep, KickEvent, FreeEvolution>;

enum class GateLabel { cirac_zoller, sigma_z, sigma_phi, fast_kick };

struct GateSchedule {
  GateLabel label = GateLabel::fast_kick;
  std::vector<ScheduleStep> steps;

  std::vector<KickEvent> kicks() const;
  // sum_j Delta k_j = 0 within tolerance (in units of eta_1)
  bool momentum_closed(double tol = 1e-9) const;
};

// Spin-selective displacement of one kick pair: |down> components of each
// ion receive (+- i eta_1, +- i eta_2) on the two modes. Phase-space
// arguments are taken in the frame rotating at the mode frequencies, with
// kick times measured from the schedule origin.
SpinMotionState fast_kick_pair(const SpinMotionState& state,
                               const KickEvent& kick, const TrapConfig& trap,
                               double reference_time = 0);

struct FastGateReport {
  // per spin branch (index 2*s1+s2): residual displacement and phase
  std::array<complexd, 4> residual_alpha_1;
  std::array<complexd, 4> residual_alpha_2;
  std::array<double, 4> geometric_phase;
  double max_excursion = 0;  // largest |alpha| reached by any branch
  bool closed = false;
  TruthTable table;  // diag(e^{i phase}) when closed
};

// Coherent-algebra analysis of a kick schedule (exact, no truncation).
FastGateReport fast_gate_analysis(const GateSchedule& schedule,
                                  const TrapConfig& trap,
                                  double closure_tol = 1e-6);

// Fock-space execution: ordered product of spin-projected displacements in
// the rotating frame. Throws when the schedule fails closure diagnostics.
SpinMotionState fast_gate(const GateSchedule& schedule, const TrapConfig& trap,
                          const SpinMotionState& state,
                          double closure_tol = 1e-6,
                          bool enforce_closure = true);

// Random optical phase picked up by a kick train over sampled classical
// ion positions: phi_t = sum_j Delta k_j r_j with Delta k_j recovered from
// each kick's sign and Lamb-Dicke scale.
double kick_random_phase(const std::vector<KickEvent>& kicks,
                         const TrapConfig& trap,
                         const std::vector<double>& positions);

// Numeric search for a 4-kick schedule closing both modes with branch phases
// (0, pi/2, pi/2, 0): kick times, strengths and the base Lamb-Dicke scale
// are solved by Newton iteration from seeded random starts.
GateSchedule solve_fast_gate_schedule(const TrapConfig& trap,
                                      std::uint64_t seed = 1,
                                      int max_restarts = 4000);

// ---------------------------------------------------------------------------
// Schedule serialization (shared by the CLI and tests)
// ---------------------------------------------------------------------------

std::string schedule_to_json(const GateSchedule& schedule);
GateSchedule schedule_from_json(const std::string& json_text);

}  // namespace gates
}  // namespace iongate
