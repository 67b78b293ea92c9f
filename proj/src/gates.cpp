#include "iongate/gates.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

namespace iongate {
namespace gates {

using constants::pi;
using constants::two_pi;
using hilbert::kSpinDown;
using hilbert::kSpinUp;

namespace {

double wrap_angle(double x) {
  x = std::fmod(x, two_pi);
  if (x > pi) x -= two_pi;
  if (x <= -pi) x += two_pi;
  return x;
}

const complexd kI(0.0, 1.0);

}  // namespace

// ---------------------------------------------------------------------------
// Truth tables
// ---------------------------------------------------------------------------

TruthTable cz_phase_table() {
  Matrix t = Matrix::Identity(4, 4);
  t(3, 3) = -1.0;
  return t;
}

TruthTable cz_cnot_table(double phi) {
  // R(-pi/2, phi) diag(1,1,1,-1) R(pi/2, phi) on the target qubit: the
  // control-down block is [[0, e^{-i phi}],[e^{i phi}, 0]].
  Matrix t = Matrix::Zero(4, 4);
  t(0, 0) = 1.0;
  t(1, 1) = 1.0;
  t(3, 2) = std::exp(kI * phi);
  t(2, 3) = std::exp(-kI * phi);
  return t;
}

TruthTable sigma_z_table() {
  Matrix t = Matrix::Identity(4, 4);
  t(1, 1) = kI;
  t(2, 2) = kI;
  return t;
}

namespace {

// Columns are the +1 / -1 eigenstates of sigma_psi.
Matrix basis_rotation(double psi) {
  Matrix q(2, 2);
  const complexd e = std::exp(kI * psi);
  q(0, 0) = 1.0 / std::sqrt(2.0);
  q(1, 0) = e / std::sqrt(2.0);
  q(0, 1) = 1.0 / std::sqrt(2.0);
  q(1, 1) = -e / std::sqrt(2.0);
  return q;
}

TruthTable rotated_phase_table(double psi1, double psi2,
                               const std::array<double, 4>& branch_phases) {
  const std::vector<Matrix> factors{basis_rotation(psi1),
                                    basis_rotation(psi2)};
  const Matrix q = hilbert::tensor(factors);
  Vector d(4);
  for (int k = 0; k < 4; ++k) d[k] = std::exp(kI * branch_phases[k]);
  return q * d.asDiagonal() * q.adjoint();
}

}  // namespace

TruthTable sigma_phi_table(double phi_s1, double phi_s2) {
  // normalized so the phi_s = 0 entries are real where the printed form is
  return std::exp(-kI * pi / 4.0) *
         rotated_phase_table(phi_s1, phi_s2, {0.0, pi / 2, pi / 2, 0.0});
}

double table_fidelity(const TruthTable& computed, const TruthTable& ideal) {
  return std::norm((ideal.adjoint() * computed).trace() / 4.0);
}

double table_agreement(const TruthTable& a, const TruthTable& b) {
  const double na = (a.adjoint() * a).trace().real();
  const double nb = (b.adjoint() * b).trace().real();
  return std::norm((a.adjoint() * b).trace()) / (na * nb);
}

std::array<double, 4> row_fidelities(const TruthTable& computed,
                                     const TruthTable& ideal) {
  std::array<double, 4> f{};
  for (int k = 0; k < 4; ++k)
    f[k] = std::norm(ideal.col(k).dot(computed.col(k)));
  return f;
}

GateRun run_truth_table(
    const std::function<SpinMotionState(const SpinMotionState&)>& gate,
    const FockBasis& basis) {
  GateRun run;
  run.table = Matrix::Zero(4, 4);
  for (int k = 0; k < 4; ++k) {
    const auto in = SpinMotionState::basis_state(basis, 2, k, 0, 0);
    const auto out = gate(in);
    for (int s = 0; s < 4; ++s)
      run.table(s, k) = out.amplitudes[out.index(s, 0, 0)];
    run.purity[k] = hilbert::reduced_spin_purity(out);
    run.ground_overlap[k] = run.table.col(k).squaredNorm();
    const auto rep = hilbert::truncation_report(out);
    run.truncation.max_populated_n1 =
        std::max(run.truncation.max_populated_n1, rep.max_populated_n1);
    run.truncation.max_populated_n2 =
        std::max(run.truncation.max_populated_n2, rep.max_populated_n2);
    run.truncation.tail_population =
        std::max(run.truncation.tail_population, rep.tail_population);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Carrier pulse
// ---------------------------------------------------------------------------

Matrix carrier_rotation(double theta, double phi) {
  Matrix r(2, 2);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  r(kSpinUp, kSpinUp) = c;
  r(kSpinUp, kSpinDown) = std::exp(-kI * phi) * s;
  r(kSpinDown, kSpinUp) = -std::exp(kI * phi) * s;
  r(kSpinDown, kSpinDown) = c;
  return r;
}

SpinMotionState carrier_pulse(const SpinMotionState& state, double theta,
                              double phi, int target_ion) {
  return hilbert::apply_spin(carrier_rotation(theta, phi), state, target_ion);
}

// ---------------------------------------------------------------------------
// Cirac-Zoller
// ---------------------------------------------------------------------------

namespace {

double mode_excited_population(const SpinMotionState& state, int mode) {
  double p = 0;
  const int d = state.basis.mode_dim();
  for (int s = 0; s < state.spin_dim(); ++s)
    for (int n1 = 0; n1 < d; ++n1)
      for (int n2 = 0; n2 < d; ++n2) {
        const int n = mode == 1 ? n1 : n2;
        if (n > 0) p += std::norm(state.amplitudes[state.index(s, n1, n2)]);
      }
  return p;
}

SpinMotionState aux_two_pi_flip(const SpinMotionState& state, int mode) {
  // 2pi pulse through the auxiliary level: -1 on |down_2> (x) |n_mode = 1>
  SpinMotionState out = state;
  const int d = state.basis.mode_dim();
  for (int s = 0; s < state.spin_dim(); ++s) {
    if ((s & 1) != kSpinDown) continue;  // ion-2 bit
    for (int n1 = 0; n1 < d; ++n1)
      for (int n2 = 0; n2 < d; ++n2) {
        const int n = mode == 1 ? n1 : n2;
        if (n == 1) out.amplitudes[out.index(s, n1, n2)] *= -1.0;
      }
  }
  return out;
}

}  // namespace

SpinMotionState cirac_zoller_phase_gate(const SpinMotionState& state,
                                        const TrapConfig& trap,
                                        const CiracZollerParams& params) {
  if (state.qubit_count != 2)
    throw PhysicsError("cirac_zoller_phase_gate: two-qubit state required");
  if (mode_excited_population(state, params.mode) > params.ground_tol)
    throw PhysicsError("cirac_zoller_phase_gate: motional mode not in the "
                       "ground state");

  dynamics::RamanDrive bsb;
  bsb.base_rabi = {params.rabi, 0.0};
  bsb.sideband = dynamics::SidebandKind::blue;
  bsb.mode = params.mode;
  const double eta = trap.eta(params.mode);
  const double pref =
      std::exp(-0.5 * (trap.eta(1) * trap.eta(1) + trap.eta(2) * trap.eta(2)));
  const double t_pi = pi / (params.rabi * pref * eta);

  const auto map_model =
      dynamics::build_model(bsb, trap, state.basis, state.qubit_count);
  bsb.optical_phase = pi;  // reversed mapping pulse
  const auto unmap_model =
      dynamics::build_model(bsb, trap, state.basis, state.qubit_count);

  auto s = dynamics::evolve(map_model, state, t_pi);
  s = aux_two_pi_flip(s, params.mode);
  return dynamics::evolve(unmap_model, s, t_pi);
}

SpinMotionState cirac_zoller_cnot(const SpinMotionState& state,
                                  const TrapConfig& trap, double phi,
                                  const CiracZollerParams& params) {
  auto s = carrier_pulse(state, pi / 2, phi, 2);
  s = cirac_zoller_phase_gate(s, trap, params);
  return carrier_pulse(s, -pi / 2, phi, 2);
}

// ---------------------------------------------------------------------------
// sigma_z gate
// ---------------------------------------------------------------------------

double sigma_z_required_rabi_diff(const TrapConfig& trap, double detuning,
                                  int mode) {
  const double pref =
      std::exp(-0.5 * (trap.eta(1) * trap.eta(1) + trap.eta(2) * trap.eta(2)));
  return std::abs(detuning) / (trap.eta(mode) * pref);
}

namespace {

// Coefficient of a^dag e^{i delta t} (rad/s, vacuum Debye-Waller level) for
// the two-ion spin branch (m1, m2) of a sigma_z force drive.
complexd sigma_z_branch_coupling(const TrapConfig& trap,
                                 const SigmaZGateParams& p, int m1, int m2) {
  const double eta = trap.eta(p.mode);
  const double pref =
      std::exp(-0.5 * (trap.eta(1) * trap.eta(1) + trap.eta(2) * trap.eta(2)));
  const complexd rabi[2] = {p.rabi_up, p.rabi_down};
  complexd c = 0;
  const int m[2] = {m1, m2};
  for (int ion = 1; ion <= 2; ++ion) {
    const double phi =
        trap.delta_k * trap.ion_positions[ion - 1] - p.optical_phase;
    c += 0.5 * eta * pref * TrapConfig::mode_sign(ion, p.mode) *
         std::conj(rabi[m[ion - 1]]) * std::exp(-kI * phi);
  }
  return c;
}

}  // namespace

SpinMotionState sigma_z_gate(const TrapConfig& trap,
                             const SigmaZGateParams& params,
                             const SpinMotionState& state) {
  if (state.qubit_count != 2)
    throw PhysicsError("sigma_z_gate: two-qubit state required");
  if (params.detuning <= 0)
    throw PhysicsError("sigma_z_gate: detuning must be positive");
  if (!params.exploratory) {
    const double sp = wrap_angle(noise::spacing_phase(trap));
    if (std::abs(sp) > params.spacing_tol)
      throw PhysicsError("sigma_z_gate: ion spacing violates "
                         "Delta k (X1 - X2) = 2 n pi");
  }
  dynamics::SigmaZForce drive;
  drive.rabi_up = params.rabi_up;
  drive.rabi_down = params.rabi_down;
  drive.detuning = params.detuning;
  drive.optical_phase = params.optical_phase;
  drive.mode = params.mode;
  const auto model = dynamics::build_model(drive, trap, state.basis, 2);
  return dynamics::evolve(model, state, two_pi / params.detuning);
}

TruthTable sigma_z_gate_analytic(const TrapConfig& trap,
                                 const SigmaZGateParams& params) {
  Matrix t = Matrix::Zero(4, 4);
  for (int s = 0; s < 4; ++s) {
    const complexd c =
        sigma_z_branch_coupling(trap, params, (s >> 1) & 1, s & 1);
    const double phase = two_pi * std::norm(c / params.detuning);
    t(s, s) = std::exp(kI * phase);
  }
  return t;
}

// ---------------------------------------------------------------------------
// sigma_phi gate
// ---------------------------------------------------------------------------

double sigma_phi_required_rabi(const TrapConfig& trap, double detuning,
                               int mode) {
  const double pref =
      std::exp(-0.5 * (trap.eta(1) * trap.eta(1) + trap.eta(2) * trap.eta(2)));
  return std::abs(detuning) / (2.0 * trap.eta(mode) * pref);
}

std::array<EffectiveSpinForce, 2> sigma_phi_effective_phases(
    const TrapConfig& trap, const SigmaPhiGateParams& p) {
  const double eta = trap.eta(p.mode);
  const double pref =
      std::exp(-0.5 * (trap.eta(1) * trap.eta(1) + trap.eta(2) * trap.eta(2)));
  std::array<EffectiveSpinForce, 2> out;
  for (int ion = 1; ion <= 2; ++ion) {
    const double x = trap.ion_positions[ion - 1];
    const double sgn = TrapConfig::mode_sign(ion, p.mode);
    const double phi_r = p.sign_red * trap.delta_k * x - p.phase_red;
    const double phi_b = p.sign_blue * trap.delta_k * x - p.phase_blue;
    const complexd c_r = -0.5 * p.rabi * pref * eta * sgn *
                         double(p.sign_red) * std::exp(kI * phi_r);
    const complexd c_b = -0.5 * p.rabi * pref * eta * sgn *
                         double(p.sign_blue) * std::exp(kI * phi_b);
    // a^dag coefficient operator c_b sigma_+ + conj(c_r) sigma_- = f sigma_psi
    const double psi = -0.5 * std::arg(c_b / std::conj(c_r));
    out[ion - 1].psi = psi;
    out[ion - 1].f = c_b * std::exp(kI * psi);
  }
  // (psi, f) and (psi + pi, -f) describe the same drive; fix ion 2's branch
  // so the two forces are opposite (the gate's working convention), keeping
  // the extraction continuous across principal-branch cuts.
  if (std::abs(out[0].f + out[1].f) > std::abs(out[0].f - out[1].f)) {
    out[1].psi = wrap_angle(out[1].psi + pi);
    out[1].f = -out[1].f;
  }
  return out;
}

namespace {

dynamics::SigmaPhiForce to_drive(const SigmaPhiGateParams& p) {
  dynamics::SigmaPhiForce d;
  d.rabi = {p.rabi, p.rabi};
  d.detuning = p.detuning;
  d.phase_red = p.phase_red;
  d.phase_blue = p.phase_blue;
  d.sign_red = p.sign_red;
  d.sign_blue = p.sign_blue;
  d.mode = p.mode;
  return d;
}

void check_sigma_phi_preconditions(const TrapConfig& trap,
                                   const SigmaPhiGateParams& p) {
  const auto eff = sigma_phi_effective_phases(trap, p);
  const double scale = std::max(std::abs(eff[0].f), std::abs(eff[1].f));
  if (std::abs(eff[0].f + eff[1].f) > p.force_phase_tol * scale)
    throw PhysicsError("sigma_phi_gate: force-phase condition "
                       "F1 e^{i phi_M1} = -F2 e^{i phi_M2} violated");
  const double phi0 =
      two_pi * std::norm((eff[0].f - eff[1].f) / p.detuning);
  if (std::abs(phi0 - pi / 2) > 1e-6)
    throw PhysicsError("sigma_phi_gate: round-trip phase not tuned to pi/2");
}

}  // namespace

SpinMotionState sigma_phi_gate(const TrapConfig& trap,
                               const SigmaPhiGateParams& params,
                               const SpinMotionState& state) {
  if (state.qubit_count != 2)
    throw PhysicsError("sigma_phi_gate: two-qubit state required");
  if (params.detuning <= 0)
    throw PhysicsError("sigma_phi_gate: detuning must be positive");
  if (!params.exploratory) check_sigma_phi_preconditions(trap, params);
  const auto model =
      dynamics::build_model(to_drive(params), trap, state.basis, 2);
  return dynamics::evolve(model, state, two_pi / params.detuning);
}

SigmaPhiGateParams sigma_phi_params_from_geometry(
    const noise::BeamGeometry& geometry, double detuning, double rabi,
    int mode) {
  geometry.validate();
  SigmaPhiGateParams p;
  p.detuning = detuning;
  p.rabi = rabi;
  p.phase_red = geometry.delta_phi(geometry.red);
  p.phase_blue = geometry.delta_phi(geometry.blue);
  p.sign_red = geometry.delta_k_sign(geometry.red);
  p.sign_blue = geometry.delta_k_sign(geometry.blue);
  p.mode = mode;
  return p;
}

TruthTable sigma_phi_gate_analytic(const TrapConfig& trap,
                                   const SigmaPhiGateParams& params) {
  const auto eff = sigma_phi_effective_phases(trap, params);
  std::array<double, 4> phases{};
  for (int k = 0; k < 4; ++k) {
    const double e1 = (k & 2) ? -1.0 : 1.0;  // eigenvalue of ion 1
    const double e2 = (k & 1) ? -1.0 : 1.0;
    const complexd c = e1 * eff[0].f + e2 * eff[1].f;
    phases[k] = two_pi * std::norm(c / params.detuning);
  }
  return rotated_phase_table(eff[0].psi, eff[1].psi, phases);
}

// ---------------------------------------------------------------------------
// Ramsey-wrapped gate
// ---------------------------------------------------------------------------

GateRun ramsey_wrapped_gate(const TrapConfig& trap,
                            const noise::BeamGeometry& geometry,
                            double detuning, double rabi, double path_shift,
                            RotationReference reference,
                            const FockBasis& basis) {
  using noise::GeometryConfiguration;
  geometry.validate();
  const bool sensitive =
      geometry.configuration == GeometryConfiguration::phase_sensitive;
  const bool insensitive =
      geometry.configuration == GeometryConfiguration::phase_insensitive;
  if (sensitive && reference != RotationReference::shared_path)
    throw PhysicsError("ramsey_wrapped_gate: phase-sensitive geometry needs "
                       "rotations on the shared non-copropagating path");
  if (insensitive && reference != RotationReference::copropagating)
    throw PhysicsError("ramsey_wrapped_gate: phase-insensitive geometry needs "
                       "copropagating or microwave rotations");
  if (!sensitive && !insensitive)
    throw PhysicsError("ramsey_wrapped_gate: custom geometry has no mandated "
                       "rotation reference");

  const auto shifted = noise::apply_path_shift(geometry, path_shift);
  auto params = sigma_phi_params_from_geometry(shifted, detuning, rabi);
  const auto eff = sigma_phi_effective_phases(trap, params);
  // Q(psi)^dag R(pi/2, psi + pi) is diagonal, so these rotations carry the
  // sigma_phi eigenbasis onto the sigma_z basis exactly.
  const double w1 = eff[0].psi + pi;
  const double w2 = eff[1].psi + pi;

  auto executor = [&](const SpinMotionState& in) {
    auto s = carrier_pulse(in, pi / 2, w1, 1);
    s = carrier_pulse(s, pi / 2, w2, 2);
    s = sigma_phi_gate(trap, params, s);
    s = carrier_pulse(s, -pi / 2, w1, 1);
    return carrier_pulse(s, -pi / 2, w2, 2);
  };
  return run_truth_table(executor, basis);
}

// ---------------------------------------------------------------------------
// Fast kick gate
// ---------------------------------------------------------------------------

std::vector<KickEvent> GateSchedule::kicks() const {
  std::vector<KickEvent> out;
  for (const auto& step : steps)
    if (const auto* k = std::get_if<KickEvent>(&step)) out.push_back(*k);
  std::sort(out.begin(), out.end(),
            [](const KickEvent& a, const KickEvent& b) {
              return a.time < b.time;
            });
  return out;
}

bool GateSchedule::momentum_closed(double tol) const {
  double sum = 0, scale = 0;
  for (const auto& k : kicks()) {
    sum += k.delta_k_sign * k.eta_1;
    scale += k.eta_1;
  }
  return std::abs(sum) <= tol * std::max(scale, 1e-300);
}

namespace {

// Rotating-frame displacement received by spin branch s from one kick.
std::array<complexd, 2> kick_displacement(const KickEvent& kick,
                                          const TrapConfig& trap, int s,
                                          double reference_time) {
  const int c1 = (s >> 1) & 1;  // 1 when ion 1 is |down>
  const int c2 = s & 1;
  const double t = kick.time - reference_time;
  std::array<complexd, 2> d;
  d[0] = kI * double(kick.delta_k_sign) * kick.eta_1 * double(c1 + c2) *
         std::exp(kI * (trap.omega_1 * t));
  d[1] = kI * double(kick.delta_k_sign) * kick.eta_2 * double(c1 - c2) *
         std::exp(kI * (trap.omega_2 * t));
  return d;
}

}  // namespace

SpinMotionState fast_kick_pair(const SpinMotionState& state,
                               const KickEvent& kick, const TrapConfig& trap,
                               double reference_time) {
  if (state.qubit_count != 2)
    throw PhysicsError("fast_kick_pair: two-qubit state required");
  const int d = state.basis.mode_dim();
  SpinMotionState out = state;
  using RowMat = Eigen::Matrix<complexd, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>;
  for (int s = 0; s < 4; ++s) {
    const auto disp = kick_displacement(kick, trap, s, reference_time);
    for (const auto& a : disp)
      if (std::norm(a) > state.basis.n_max / 4.0)
        throw PhysicsError("fast_kick_pair: kick exceeds the displacement "
                           "leakage guard");
    const Matrix d1 = dynamics::displacement_operator(state.basis, disp[0]);
    const Matrix d2 = dynamics::displacement_operator(state.basis, disp[1]);
    Eigen::Map<const RowMat> psi(state.amplitudes.data() + long(s) * d * d, d,
                                 d);
    Eigen::Map<RowMat> o(out.amplitudes.data() + long(s) * d * d, d, d);
    o = d1 * psi * d2.transpose();
  }
  return out;
}

FastGateReport fast_gate_analysis(const GateSchedule& schedule,
                                  const TrapConfig& trap, double closure_tol) {
  FastGateReport rep;
  const auto kicks = schedule.kicks();
  for (int s = 0; s < 4; ++s) {
    complexd a1 = 0, a2 = 0;
    double phase = 0;
    for (const auto& k : kicks) {
      const auto d = kick_displacement(k, trap, s, 0.0);
      phase += std::imag(std::conj(a1) * d[0]) +
               std::imag(std::conj(a2) * d[1]);
      a1 += d[0];
      a2 += d[1];
      rep.max_excursion =
          std::max({rep.max_excursion, std::abs(a1), std::abs(a2)});
    }
    rep.residual_alpha_1[s] = a1;
    rep.residual_alpha_2[s] = a2;
    rep.geometric_phase[s] = phase;
  }
  rep.closed = schedule.momentum_closed();
  for (int s = 0; s < 4; ++s)
    if (std::abs(rep.residual_alpha_1[s]) > closure_tol ||
        std::abs(rep.residual_alpha_2[s]) > closure_tol)
      rep.closed = false;
  rep.table = Matrix::Zero(4, 4);
  for (int s = 0; s < 4; ++s)
    rep.table(s, s) = std::exp(kI * rep.geometric_phase[s]);
  return rep;
}

SpinMotionState fast_gate(const GateSchedule& schedule, const TrapConfig& trap,
                          const SpinMotionState& state, double closure_tol,
                          bool enforce_closure) {
  if (state.qubit_count != 2)
    throw PhysicsError("fast_gate: two-qubit state required");
  if (enforce_closure) {
    const auto rep = fast_gate_analysis(schedule, trap, closure_tol);
    if (!rep.closed)
      throw PhysicsError("fast_gate: schedule fails closure diagnostics");
  }
  SpinMotionState out = state;
  for (const auto& k : schedule.kicks())
    out = fast_kick_pair(out, k, trap, 0.0);
  return out;
}

double kick_random_phase(const std::vector<KickEvent>& kicks,
                         const TrapConfig& trap,
                         const std::vector<double>& positions) {
  std::vector<double> delta_ks;
  delta_ks.reserve(kicks.size());
  const double eta1 = trap.eta(1);
  for (const auto& k : kicks)
    delta_ks.push_back(k.delta_k_sign * (k.eta_1 / eta1) * trap.delta_k);
  return noise::fast_gate_random_phase(delta_ks, positions);
}

// ---------------------------------------------------------------------------
// Schedule solver
// ---------------------------------------------------------------------------

namespace {

struct SolverProblem {
  double omega_1, omega_2;

  // u = (t2, t3, t4, x2, x3, x4, eta2); t1 = 0, x1 = 1
  Eigen::VectorXd residual(const Eigen::VectorXd& u) const {
    const double t[4] = {0.0, u[0], u[1], u[2]};
    const double x[4] = {1.0, u[3], u[4], u[5]};
    const double eta2 = u[6];
    const double eta1 = std::pow(3.0, 0.25) * eta2;

    Eigen::VectorXd f(7);
    f[0] = x[0] + x[1] + x[2] + x[3];
    complexd c1 = 0, c2 = 0;
    for (int j = 0; j < 4; ++j) {
      c1 += x[j] * std::exp(kI * (omega_1 * t[j]));
      c2 += x[j] * std::exp(kI * (omega_2 * t[j]));
    }
    f[1] = c1.real();
    f[2] = c1.imag();
    f[3] = c2.real();
    f[4] = c2.imag();
    double s1 = 0, s2 = 0;
    for (int k = 1; k < 4; ++k)
      for (int j = 0; j < k; ++j) {
        s1 += x[k] * x[j] * std::sin(omega_1 * (t[k] - t[j]));
        s2 += x[k] * x[j] * std::sin(omega_2 * (t[k] - t[j]));
      }
    f[5] = 4.0 * eta1 * eta1 * s1;
    f[6] = eta1 * eta1 * s1 + eta2 * eta2 * s2 - pi / 2;
    return f;
  }
};

bool newton_solve(const SolverProblem& prob, Eigen::VectorXd& u) {
  for (int iter = 0; iter < 80; ++iter) {
    Eigen::VectorXd f = prob.residual(u);
    const double fn = f.lpNorm<Eigen::Infinity>();
    if (fn < 1e-12) return true;
    Eigen::MatrixXd jac(7, 7);
    for (int j = 0; j < 7; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(u[j]));
      Eigen::VectorXd up = u;
      up[j] += h;
      jac.col(j) = (prob.residual(up) - f) / h;
    }
    Eigen::VectorXd step = jac.fullPivLu().solve(-f);
    if (!step.allFinite()) return false;
    // backtracking line search
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      Eigen::VectorXd trial = u + lambda * step;
      if (trial[6] > 0 &&
          prob.residual(trial).lpNorm<Eigen::Infinity>() < fn) {
        u = trial;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) return false;
  }
  return prob.residual(u).lpNorm<Eigen::Infinity>() < 1e-12;
}

}  // namespace

GateSchedule solve_fast_gate_schedule(const TrapConfig& trap,
                                      std::uint64_t seed, int max_restarts) {
  SolverProblem prob{trap.omega_1, trap.omega_2};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(0.05, 2.5);
  std::uniform_real_distribution<double> ux(0.3, 2.0);
  std::uniform_real_distribution<double> ue(0.25, 0.9);
  std::uniform_int_distribution<int> usign(0, 1);
  const double period = two_pi / trap.omega_1;

  for (int attempt = 0; attempt < max_restarts; ++attempt) {
    Eigen::VectorXd u(7);
    u[0] = ut(rng) * period;
    u[1] = ut(rng) * period;
    u[2] = ut(rng) * period;
    for (int j = 3; j < 6; ++j) u[j] = (usign(rng) ? 1.0 : -1.0) * ux(rng);
    u[6] = ue(rng);
    if (!newton_solve(prob, u)) continue;

    const double t[4] = {0.0, u[0], u[1], u[2]};
    const double x[4] = {1.0, u[3], u[4], u[5]};
    const double eta2 = u[6];
    const double eta1 = std::pow(3.0, 0.25) * eta2;

    bool ok = eta2 > 0.05 && eta2 < 1.2;
    for (int j = 0; j < 4 && ok; ++j) {
      if (std::abs(x[j]) < 0.05 || std::abs(x[j]) > 3.5) ok = false;
      if (t[j] < -1e-12 || t[j] > 6.0 * period) ok = false;
    }
    if (!ok) continue;
    // distinct kick times
    std::array<double, 4> ts{t[0], t[1], t[2], t[3]};
    std::sort(ts.begin(), ts.end());
    for (int j = 0; j + 1 < 4; ++j)
      if (ts[j + 1] - ts[j] < 1e-4 * period) ok = false;
    if (!ok) continue;

    GateSchedule schedule;
    schedule.label = GateLabel::fast_kick;
    for (int j = 0; j < 4; ++j) {
      KickEvent k;
      k.time = t[j];
      k.delta_k_sign = x[j] >= 0 ? 1 : -1;
      k.eta_1 = std::abs(x[j]) * eta1;
      k.eta_2 = std::abs(x[j]) * eta2;
      schedule.steps.push_back(k);
    }
    const auto rep = fast_gate_analysis(schedule, trap, 1e-6);
    if (!rep.closed || rep.max_excursion > 2.4) continue;
    if (table_fidelity(rep.table, sigma_z_table()) < 1.0 - 1e-9) continue;
    return schedule;
  }
  throw ConvergenceError("solve_fast_gate_schedule: no schedule found; "
                         "increase max_restarts");
}

// ---------------------------------------------------------------------------
// Schedule serialization
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json drive_to_json(const dynamics::DriveSpec& drive) {
  json j;
  if (const auto* r = std::get_if<dynamics::RamanDrive>(&drive)) {
    j["kind"] = r->sideband == dynamics::SidebandKind::carrier ? "carrier"
                : r->sideband == dynamics::SidebandKind::red   ? "red"
                                                               : "blue";
    j["rabi"] = {{"re", {r->base_rabi[0].real(), r->base_rabi[1].real()}},
                 {"im", {r->base_rabi[0].imag(), r->base_rabi[1].imag()}}};
    j["detuning"] = r->detuning;
    j["mode"] = r->mode;
    j["optical_phase"] = r->optical_phase;
    j["delta_k_sign"] = r->delta_k_sign;
    j["stark_up"] = r->stark_up;
    j["stark_down"] = r->stark_down;
  } else if (const auto* z = std::get_if<dynamics::SigmaZForce>(&drive)) {
    j["kind"] = "sigma_z_force";
    j["rabi_up"] = {z->rabi_up.real(), z->rabi_up.imag()};
    j["rabi_down"] = {z->rabi_down.real(), z->rabi_down.imag()};
    j["detuning"] = z->detuning;
    j["optical_phase"] = z->optical_phase;
    j["mode"] = z->mode;
  } else if (const auto* f = std::get_if<dynamics::LinearForce>(&drive)) {
    j["kind"] = "linear_force";
    j["coupling"] = {f->coupling.real(), f->coupling.imag()};
    j["detuning"] = f->detuning;
    j["mode"] = f->mode;
  } else {
    const auto& p = std::get<dynamics::SigmaPhiForce>(drive);
    j["kind"] = "sigma_phi_force";
    j["rabi"] = p.rabi;
    j["detuning"] = p.detuning;
    j["phase_red"] = p.phase_red;
    j["phase_blue"] = p.phase_blue;
    j["sign_red"] = p.sign_red;
    j["sign_blue"] = p.sign_blue;
    j["mode"] = p.mode;
  }
  return j;
}

dynamics::DriveSpec drive_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "carrier" || kind == "red" || kind == "blue") {
    dynamics::RamanDrive r;
    r.sideband = kind == "carrier" ? dynamics::SidebandKind::carrier
                 : kind == "red"   ? dynamics::SidebandKind::red
                                   : dynamics::SidebandKind::blue;
    const auto& re = j.at("rabi").at("re");
    const auto& im = j.at("rabi").at("im");
    r.base_rabi = {complexd(re[0], im[0]), complexd(re[1], im[1])};
    r.detuning = j.at("detuning");
    r.mode = j.at("mode");
    r.optical_phase = j.at("optical_phase");
    r.delta_k_sign = j.at("delta_k_sign");
    r.stark_up = j.at("stark_up");
    r.stark_down = j.at("stark_down");
    return r;
  }
  if (kind == "sigma_z_force") {
    dynamics::SigmaZForce z;
    z.rabi_up = complexd(j.at("rabi_up")[0], j.at("rabi_up")[1]);
    z.rabi_down = complexd(j.at("rabi_down")[0], j.at("rabi_down")[1]);
    z.detuning = j.at("detuning");
    z.optical_phase = j.at("optical_phase");
    z.mode = j.at("mode");
    return z;
  }
  if (kind == "linear_force") {
    dynamics::LinearForce f;
    f.coupling = complexd(j.at("coupling")[0], j.at("coupling")[1]);
    f.detuning = j.at("detuning");
    f.mode = j.at("mode");
    return f;
  }
  if (kind == "sigma_phi_force") {
    dynamics::SigmaPhiForce p;
    p.rabi = j.at("rabi");
    p.detuning = j.at("detuning");
    p.phase_red = j.at("phase_red");
    p.phase_blue = j.at("phase_blue");
    p.sign_red = j.at("sign_red");
    p.sign_blue = j.at("sign_blue");
    p.mode = j.at("mode");
    return p;
  }
  throw SchemaError("unknown drive kind: " + kind);
}

const char* label_name(GateLabel l) {
  switch (l) {
    case GateLabel::cirac_zoller: return "cirac_zoller";
    case GateLabel::sigma_z: return "sigma_z";
    case GateLabel::sigma_phi: return "sigma_phi";
    case GateLabel::fast_kick: return "fast_kick";
  }
  return "fast_kick";
}

GateLabel label_from_name(const std::string& s) {
  if (s == "cirac_zoller") return GateLabel::cirac_zoller;
  if (s == "sigma_z") return GateLabel::sigma_z;
  if (s == "sigma_phi") return GateLabel::sigma_phi;
  if (s == "fast_kick") return GateLabel::fast_kick;
  throw SchemaError("unknown gate label: " + s);
}

}  // namespace

std::string schedule_to_json(const GateSchedule& schedule) {
  json j;
  j["label"] = label_name(schedule.label);
  j["steps"] = json::array();
  for (const auto& step : schedule.steps) {
    json s;
    if (const auto* k = std::get_if<KickEvent>(&step)) {
      s["type"] = "kick";
      s["time"] = k->time;
      s["delta_k_sign"] = k->delta_k_sign;
      s["eta_1"] = k->eta_1;
      s["eta_2"] = k->eta_2;
    } else if (const auto* f = std::get_if<FreeEvolution>(&step)) {
      s["type"] = "free";
      s["duration"] = f->duration;
    } else {
      const auto& d = std::get<DriveStep>(step);
      s["type"] = "drive";
      s["duration"] = d.duration;
      s["drive"] = drive_to_json(d.drive);
    }
    j["steps"].push_back(s);
  }
  return j.dump(2);
}

GateSchedule schedule_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schedule JSON parse: ") + e.what());
  }
  GateSchedule schedule;
  try {
    schedule.label = label_from_name(j.at("label"));
    for (const auto& s : j.at("steps")) {
      const std::string type = s.at("type");
      if (type == "kick") {
        KickEvent k;
        k.time = s.at("time");
        k.delta_k_sign = s.at("delta_k_sign");
        k.eta_1 = s.at("eta_1");
        k.eta_2 = s.at("eta_2");
        schedule.steps.emplace_back(k);
      } else if (type == "free") {
        schedule.steps.emplace_back(FreeEvolution{s.at("duration")});
      } else if (type == "drive") {
        DriveStep d;
        d.duration = s.at("duration");
        d.drive = drive_from_json(s.at("drive"));
        schedule.steps.emplace_back(d);
      } else {
        throw SchemaError("unknown schedule step type: " + type);
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schedule JSON: ") + e.what());
  }
  return schedule;
}

}  // namespace gates
}  // namespace iongate
