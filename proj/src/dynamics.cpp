#include "iongate/dynamics.hpp"

#include <cmath>

namespace iongate {
namespace dynamics {

using hilbert::kSpinDown;
using hilbert::kSpinUp;
using constants::hbar;

// ---------------------------------------------------------------------------
// Trap
// ---------------------------------------------------------------------------

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
}

TrapConfig TrapConfig::make(double omega_1, double ion_mass, double delta_k,
                            std::array<double, 2> positions) {
  if (omega_1 <= 0 || ion_mass <= 0)
    throw PhysicsError("TrapConfig: omega_1 and ion_mass must be positive");
  TrapConfig t;
  t.omega_1 = omega_1;
  t.omega_2 = kSqrt3 * omega_1;
  t.ion_mass = ion_mass;
  t.delta_k = delta_k;
  t.ion_positions = positions;
  return t;
}

TrapConfig TrapConfig::make_checked(double omega_1, double omega_2,
                                    double ion_mass, double delta_k,
                                    std::array<double, 2> positions) {
  if (std::abs(omega_2 - kSqrt3 * omega_1) > 1e-12 * omega_2)
    throw PhysicsError("TrapConfig: omega_2 != sqrt(3) omega_1");
  TrapConfig t = make(omega_1, ion_mass, delta_k, positions);
  t.omega_2 = omega_2;
  return t;
}

double TrapConfig::mode_frequency(int mode) const {
  if (mode == 1) return omega_1;
  if (mode == 2) return omega_2;
  throw PhysicsError("TrapConfig: mode must be 1 or 2");
}

double TrapConfig::mode_spread(int mode) const {
  return std::sqrt(hbar / (2.0 * ion_mass * mode_frequency(mode)));
}

double TrapConfig::eta(int mode) const {
  return delta_k * mode_spread(mode) / std::sqrt(2.0);
}

// ---------------------------------------------------------------------------
// Laguerre / Debye-Waller
// ---------------------------------------------------------------------------

double laguerre(int n, double x, int k) {
  if (n < 0) throw PhysicsError("laguerre: negative order");
  double lm1 = 1.0;                    // L_0
  if (n == 0) return lm1;
  double l = 1.0 + k - x;              // L_1
  for (int j = 2; j <= n; ++j) {
    const double next = ((2.0 * j - 1.0 + k - x) * l - (j - 1.0 + k) * lm1) / j;
    lm1 = l;
    l = next;
  }
  return l;
}

double debye_waller(int n1, int n2, double eta1, double eta2,
                    SidebandOrder order) {
  if (n1 < 0 || n2 < 0)
    throw PhysicsError("debye_waller: negative quantum number");
  const double pref = std::exp(-0.5 * (eta1 * eta1 + eta2 * eta2));
  if (order.kind == SidebandKind::carrier)
    return pref * laguerre(n1, eta1 * eta1) * laguerre(n2, eta2 * eta2);

  const int nd = order.mode == 1 ? n1 : n2;
  const int ns = order.mode == 1 ? n2 : n1;
  const double ed = order.mode == 1 ? eta1 : eta2;
  const double es = order.mode == 1 ? eta2 : eta1;
  if (nd < 1)
    throw PhysicsError("debye_waller: first sideband needs n >= 1 on the "
                       "driven mode");
  // |<n-1| e^{i eta (a + a^dag)} |n>| = eta e^{-eta^2/2} L^1_{n-1}(eta^2)/sqrt(n)
  return pref * ed * laguerre(nd - 1, ed * ed, 1) / std::sqrt(double(nd)) *
         laguerre(ns, es * es);
}

// ---------------------------------------------------------------------------
// HamiltonianModel
// ---------------------------------------------------------------------------

HamiltonianModel::Factor HamiltonianModel::Factor::identity(int d) {
  Factor f;
  f.diag = Vector::Ones(d);
  f.m = f.diag.asDiagonal();
  f.is_diag = true;
  f.shift = 0;
  return f;
}

HamiltonianModel::Factor HamiltonianModel::Factor::diagonal(const Vector& v) {
  Factor f;
  f.diag = v;
  f.m = v.asDiagonal();
  f.is_diag = true;
  f.shift = 0;
  return f;
}

HamiltonianModel::Factor HamiltonianModel::Factor::dense(const Matrix& m,
                                                         int shift) {
  Factor f;
  f.m = m;
  f.is_diag = false;
  f.shift = shift;
  return f;
}

void HamiltonianModel::add_term(Term t) { terms_.push_back(std::move(t)); }

namespace {

HamiltonianModel::Factor adjoint_of(const HamiltonianModel::Factor& f) {
  if (f.is_diag)
    return HamiltonianModel::Factor::diagonal(f.diag.conjugate());
  return HamiltonianModel::Factor::dense(f.m.adjoint(), -f.shift);
}

}  // namespace

void HamiltonianModel::add_term_with_conjugate(Term t) {
  Term conj;
  conj.spin = t.spin.adjoint();
  conj.mode1 = adjoint_of(t.mode1);
  conj.mode2 = adjoint_of(t.mode2);
  conj.coeff = std::conj(t.coeff);
  conj.rotation = -t.rotation;
  conj.spin_shift = -t.spin_shift;
  terms_.push_back(std::move(t));
  terms_.push_back(std::move(conj));
}

using RowMat =
    Eigen::Matrix<complexd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void HamiltonianModel::apply(double t, const Vector& in, Vector& out) const {
  const int d = basis_.mode_dim();
  const int ns = spin_dim();
  if (out.size() != in.size()) out.resize(in.size());
  out.setZero();
  RowMat q(d, d), tmp(d, d);
  for (const auto& term : terms_) {
    const complexd phase =
        term.coeff *
        (term.rotation == 0
             ? complexd(1.0)
             : std::exp(complexd(0.0, term.rotation * delta_ * t)));
    for (int s = 0; s < ns; ++s) {
      bool used = false;
      for (int sp = 0; sp < ns; ++sp)
        if (term.spin(sp, s) != complexd(0.0)) {
          used = true;
          break;
        }
      if (!used) continue;
      Eigen::Map<const RowMat> psi(in.data() + long(s) * d * d, d, d);
      if (term.mode1.is_diag)
        tmp = term.mode1.diag.asDiagonal() * psi;
      else
        tmp = term.mode1.m * psi;
      if (term.mode2.is_diag)
        q = tmp * term.mode2.diag.asDiagonal();
      else
        q.noalias() = tmp * term.mode2.m.transpose();
      for (int sp = 0; sp < ns; ++sp) {
        const complexd c = term.spin(sp, s);
        if (c == complexd(0.0)) continue;
        Eigen::Map<RowMat> o(out.data() + long(sp) * d * d, d, d);
        o += (phase * c) * q;
      }
    }
  }
}

Matrix HamiltonianModel::dense(double t) const {
  Matrix h = Matrix::Zero(dim(), dim());
  for (const auto& term : terms_) {
    const complexd phase =
        term.coeff *
        (term.rotation == 0
             ? complexd(1.0)
             : std::exp(complexd(0.0, term.rotation * delta_ * t)));
    const std::vector<Matrix> factors{term.spin, term.mode1.m, term.mode2.m};
    h += phase * hilbert::tensor(factors);
  }
  return h;
}

double HamiltonianModel::max_abs_entry() const {
  double bound = 0;
  for (const auto& term : terms_) {
    const double s = term.spin.cwiseAbs().maxCoeff();
    const double a = term.mode1.is_diag ? term.mode1.diag.cwiseAbs().maxCoeff()
                                        : term.mode1.m.cwiseAbs().maxCoeff();
    const double b = term.mode2.is_diag ? term.mode2.diag.cwiseAbs().maxCoeff()
                                        : term.mode2.m.cwiseAbs().maxCoeff();
    bound += std::abs(term.coeff) * s * a * b;
  }
  return bound;
}

std::optional<Vector> HamiltonianModel::frame_generator() const {
  const int d = basis_.mode_dim();
  const int ns = spin_dim();
  const long n = dim();

  bool all_static = true;
  for (const auto& t : terms_)
    if (t.rotation != 0) all_static = false;
  if (all_static) return Vector::Zero(n);

  auto try_mode = [&](int mode) -> std::optional<Vector> {
    for (const auto& t : terms_) {
      const int shift = mode == 1 ? t.mode1.shift : t.mode2.shift;
      const int other = mode == 1 ? t.mode2.shift : t.mode1.shift;
      if (t.rotation != shift || other != 0) return std::nullopt;
    }
    Vector g(n);
    for (int s = 0; s < ns; ++s)
      for (int n1 = 0; n1 < d; ++n1)
        for (int n2 = 0; n2 < d; ++n2)
          g[(long(s) * d + n1) * d + n2] = mode == 1 ? n1 : n2;
    return g;
  };
  auto try_spin = [&]() -> std::optional<Vector> {
    for (const auto& t : terms_) {
      if (t.rotation != t.spin_shift) return std::nullopt;
      if (t.mode1.shift != 0 || t.mode2.shift != 0) return std::nullopt;
    }
    Vector g(n);
    const long dm = basis_.motional_dim();
    for (int s = 0; s < ns; ++s) {
      int ups = qubit_count_;
      for (int b = 0; b < qubit_count_; ++b)
        if ((s >> b) & 1) --ups;  // bit 1 = |down>
      g.segment(long(s) * dm, dm).setConstant(double(ups));
    }
    return g;
  };

  if (auto g = try_mode(2)) return g;
  if (auto g = try_mode(1)) return g;
  if (auto g = try_spin()) return g;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Model builders
// ---------------------------------------------------------------------------

namespace {

// sigma_+ on ion `ion` lifted to the spin factor space.
Matrix spin_plus(int ion, int qubits) {
  std::vector<Matrix> f;
  for (int q = 1; q <= qubits; ++q)
    f.push_back(q == ion ? hilbert::sigma_plus() : Matrix::Identity(2, 2));
  return hilbert::tensor(f);
}

Matrix spin_proj(int ion, int spin, int qubits) {
  std::vector<Matrix> f;
  for (int q = 1; q <= qubits; ++q)
    f.push_back(q == ion ? hilbert::spin_projector(spin)
                         : Matrix::Identity(2, 2));
  return hilbert::tensor(f);
}

Vector laguerre_diag(int d, double eta_sq) {
  Vector v(d);
  for (int n = 0; n < d; ++n) v[n] = laguerre(n, eta_sq);
  return v;
}

// First-sideband lowering matrix on the driven mode:
// E(n-1, n) = eta L^1_{n-1}(eta^2)/sqrt(n), the exact matrix element of
// e^{i eta (a + a^dag)} one step below the diagonal (magnitude).
Matrix sideband_lowering(int d, double eta) {
  Matrix e = Matrix::Zero(d, d);
  for (int n = 1; n < d; ++n)
    e(n - 1, n) = eta * laguerre(n - 1, eta * eta, 1) / std::sqrt(double(n));
  return e;
}

using Factor = HamiltonianModel::Factor;
using Term = HamiltonianModel::Term;

void build_raman(const RamanDrive& d, const TrapConfig& trap,
                 const FockBasis& basis, int qubits, HamiltonianModel& model) {
  const int dm = basis.mode_dim();
  const bool coprop = d.delta_k_sign == 0;
  const double eta1 = coprop ? 0.0 : trap.eta(1);
  const double eta2 = coprop ? 0.0 : trap.eta(2);
  const double pref = std::exp(-0.5 * (eta1 * eta1 + eta2 * eta2));

  if (d.sideband != SidebandKind::carrier && coprop)
    throw PhysicsError("sideband drive requires a non-zero wave-vector "
                       "difference");

  for (int ion = 1; ion <= qubits; ++ion) {
    const complexd omega = d.base_rabi[ion - 1];
    if (omega != complexd(0.0)) {
      const double phi =
          coprop ? -d.optical_phase
                 : d.delta_k_sign * trap.delta_k * trap.ion_positions[ion - 1] -
                       d.optical_phase;
      const complexd phase = std::exp(complexd(0, phi));
      if (d.sideband == SidebandKind::carrier) {
        Term t;
        t.spin = spin_plus(ion, qubits);
        t.mode1 = Factor::diagonal(laguerre_diag(dm, eta1 * eta1));
        t.mode2 = Factor::diagonal(laguerre_diag(dm, eta2 * eta2));
        t.coeff = -0.5 * omega * pref * phase;
        t.rotation = d.detuning != 0.0 ? 1 : 0;
        t.spin_shift = 1;
        model.add_term_with_conjugate(std::move(t));
      } else {
        const int mode = d.mode;
        if (mode != 1 && mode != 2)
          throw PhysicsError("sideband drive: mode must be 1 or 2");
        const double eta_d = mode == 1 ? eta1 : eta2;
        const double eta_s = mode == 1 ? eta2 : eta1;
        const double sgn =
            TrapConfig::mode_sign(ion, mode) * double(d.delta_k_sign);
        const Matrix low = sideband_lowering(dm, eta_d);
        Factor driven = d.sideband == SidebandKind::red
                            ? Factor::dense(low, -1)
                            : Factor::dense(low.transpose().eval(), +1);
        Factor spect = Factor::diagonal(laguerre_diag(dm, eta_s * eta_s));
        Term t;
        t.spin = spin_plus(ion, qubits);
        t.mode1 = mode == 1 ? driven : spect;
        t.mode2 = mode == 1 ? spect : driven;
        t.coeff = -0.5 * omega * pref * sgn * phase;
        t.rotation = d.detuning == 0.0
                         ? 0
                         : (d.sideband == SidebandKind::red ? -1 : +1);
        t.spin_shift = 1;
        model.add_term_with_conjugate(std::move(t));
      }
    }
    // AC Stark diagonals
    const double chi[2] = {d.stark_up[ion - 1], d.stark_down[ion - 1]};
    for (int m = 0; m < 2; ++m) {
      if (chi[m] == 0.0) continue;
      Term t;
      t.spin = spin_proj(ion, m, qubits);
      t.mode1 = Factor::identity(dm);
      t.mode2 = Factor::identity(dm);
      t.coeff = -0.5 * chi[m];
      model.add_term(std::move(t));
    }
  }
}

void build_sigma_z(const SigmaZForce& d, const TrapConfig& trap,
                   const FockBasis& basis, int qubits,
                   HamiltonianModel& model) {
  if (d.detuning == 0.0)
    throw PhysicsError("sigma_z force: resonant drive (delta = 0) rejected");
  const int dm = basis.mode_dim();
  const double eta1 = trap.eta(1);
  const double eta2 = trap.eta(2);
  const double pref = std::exp(-0.5 * (eta1 * eta1 + eta2 * eta2));
  const int mode = d.mode;
  if (mode != 1 && mode != 2)
    throw PhysicsError("sigma_z force: mode must be 1 or 2");
  const double eta_d = mode == 1 ? eta1 : eta2;
  const double eta_s = mode == 1 ? eta2 : eta1;
  const Matrix low = sideband_lowering(dm, eta_d);
  const Factor spect = Factor::diagonal(laguerre_diag(dm, eta_s * eta_s));
  const complexd rabi[2] = {d.rabi_up, d.rabi_down};

  for (int ion = 1; ion <= qubits; ++ion) {
    const double phi =
        trap.delta_k * trap.ion_positions[ion - 1] - d.optical_phase;
    const double sgn = TrapConfig::mode_sign(ion, mode);
    for (int m = 0; m < 2; ++m) {
      if (rabi[m] == complexd(0.0)) continue;
      Term t;
      t.spin = spin_proj(ion, m, qubits);
      Factor driven = Factor::dense(low, -1);
      t.mode1 = mode == 1 ? driven : spect;
      t.mode2 = mode == 1 ? spect : driven;
      t.coeff = 0.5 * rabi[m] * pref * sgn * std::exp(complexd(0, phi));
      t.rotation = -1;
      model.add_term_with_conjugate(std::move(t));
    }
  }
}

void build_sigma_phi(const SigmaPhiForce& d, const TrapConfig& trap,
                     const FockBasis& basis, int qubits,
                     HamiltonianModel& model) {
  if (d.detuning == 0.0)
    throw PhysicsError("sigma_phi force: resonant drive (delta = 0) rejected");
  const int dm = basis.mode_dim();
  const double eta1 = trap.eta(1);
  const double eta2 = trap.eta(2);
  const double pref = std::exp(-0.5 * (eta1 * eta1 + eta2 * eta2));
  const int mode = d.mode;
  const double eta_d = mode == 1 ? eta1 : eta2;
  const double eta_s = mode == 1 ? eta2 : eta1;
  const Matrix low = sideband_lowering(dm, eta_d);
  const Factor spect = Factor::diagonal(laguerre_diag(dm, eta_s * eta_s));

  for (int ion = 1; ion <= qubits; ++ion) {
    const double omega = d.rabi[ion - 1];
    if (omega == 0.0) continue;
    const double x = trap.ion_positions[ion - 1];
    const double sgn = TrapConfig::mode_sign(ion, mode);
    const double phi_r = d.sign_red * trap.delta_k * x - d.phase_red;
    const double phi_b = d.sign_blue * trap.delta_k * x - d.phase_blue;

    Term red;
    red.spin = spin_plus(ion, qubits);
    Factor lower = Factor::dense(low, -1);
    red.mode1 = mode == 1 ? lower : spect;
    red.mode2 = mode == 1 ? spect : lower;
    red.coeff =
        -0.5 * omega * pref * sgn * d.sign_red * std::exp(complexd(0, phi_r));
    red.rotation = -1;
    red.spin_shift = 1;
    model.add_term_with_conjugate(std::move(red));

    Term blue;
    blue.spin = spin_plus(ion, qubits);
    Factor raise = Factor::dense(low.transpose().eval(), +1);
    blue.mode1 = mode == 1 ? raise : spect;
    blue.mode2 = mode == 1 ? spect : raise;
    blue.coeff =
        -0.5 * omega * pref * sgn * d.sign_blue * std::exp(complexd(0, phi_b));
    blue.rotation = +1;
    blue.spin_shift = 1;
    model.add_term_with_conjugate(std::move(blue));
  }
}

void build_linear_force(const LinearForce& d, const FockBasis& basis,
                        int qubits, HamiltonianModel& model) {
  if (d.detuning == 0.0)
    throw PhysicsError("linear force: resonant drive (delta = 0) rejected");
  if (d.mode != 1 && d.mode != 2)
    throw PhysicsError("linear force: mode must be 1 or 2");
  const int dm = basis.mode_dim();
  Matrix a = Matrix::Zero(dm, dm);
  for (int n = 1; n < dm; ++n) a(n - 1, n) = std::sqrt(double(n));
  Term t;
  t.spin = Matrix::Identity(1 << qubits, 1 << qubits);
  Factor lower = Factor::dense(a, -1);
  t.mode1 = d.mode == 1 ? lower : Factor::identity(dm);
  t.mode2 = d.mode == 2 ? lower : Factor::identity(dm);
  t.coeff = std::conj(d.coupling);
  t.rotation = -1;
  model.add_term_with_conjugate(std::move(t));
}

}  // namespace

HamiltonianModel build_model(const DriveSpec& drive, const TrapConfig& trap,
                             const FockBasis& basis, int qubit_count) {
  double delta = 0;
  std::visit([&](const auto& d) { delta = d.detuning; }, drive);
  HamiltonianModel model(basis, qubit_count, delta);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, RamanDrive>)
          build_raman(d, trap, basis, qubit_count, model);
        else if constexpr (std::is_same_v<T, SigmaZForce>)
          build_sigma_z(d, trap, basis, qubit_count, model);
        else if constexpr (std::is_same_v<T, SigmaPhiForce>)
          build_sigma_phi(d, trap, basis, qubit_count, model);
        else
          build_linear_force(d, basis, qubit_count, model);
      },
      drive);
  return model;
}

Matrix build_interaction_hamiltonian(const DriveSpec& drive,
                                     const TrapConfig& trap,
                                     const FockBasis& basis, int qubit_count,
                                     double t) {
  return build_model(drive, trap, basis, qubit_count).dense(t);
}

// ---------------------------------------------------------------------------
// Forced-oscillator closed forms
// ---------------------------------------------------------------------------

complexd alpha_from_coupling(complexd c, double delta, double t) {
  if (delta == 0.0)
    throw PhysicsError("resonant force (delta = 0) has no circular orbit");
  return (c / delta) * (1.0 - std::exp(complexd(0, delta * t)));
}

double running_phase_from_coupling(complexd c, double delta, double t) {
  if (delta == 0.0)
    throw PhysicsError("resonant force (delta = 0) has no circular orbit");
  const double r2 = std::norm(c / delta);
  return r2 * (delta * t - std::sin(delta * t));
}

complexd alpha_of_t(complexd force, double delta, double x0, double t) {
  return alpha_from_coupling(force * x0 / (2.0 * hbar), delta, t);
}

double round_trip_phase(complexd force, double delta, double x0) {
  if (delta == 0.0)
    throw PhysicsError("resonant force (delta = 0) has no round trip");
  return constants::pi * std::norm(force * x0) /
         (2.0 * hbar * hbar * delta * delta);
}

double running_phase(complexd force, double delta, double x0, double t) {
  return running_phase_from_coupling(force * x0 / (2.0 * hbar), delta, t);
}

Trajectory sample_force_trajectory(complexd force, double delta, double x0,
                                   double t_final, int n_samples) {
  Trajectory traj;
  traj.times.reserve(n_samples + 1);
  traj.alpha.reserve(n_samples + 1);
  traj.phase.reserve(n_samples + 1);
  for (int k = 0; k <= n_samples; ++k) {
    const double t = t_final * k / n_samples;
    traj.times.push_back(t);
    traj.alpha.push_back(alpha_of_t(force, delta, x0, t));
    traj.phase.push_back(running_phase(force, delta, x0, t));
  }
  return traj;
}

double shoelace_phase(const std::vector<complexd>& loop) {
  double area2 = 0;
  const size_t n = loop.size();
  for (size_t i = 0; i + 1 < n; ++i)
    area2 += std::imag(std::conj(loop[i]) * loop[i + 1]);
  area2 += std::imag(std::conj(loop[n - 1]) * loop[0]);
  return area2;
}

double discrete_geometric_phase(const std::vector<complexd>& path) {
  double phi = 0;
  for (size_t i = 0; i + 1 < path.size(); ++i)
    phi += std::imag(std::conj(path[i]) * (path[i + 1] - path[i]));
  return phi;
}

// ---------------------------------------------------------------------------
// Displacement
// ---------------------------------------------------------------------------

Matrix exp_i_hermitian(const Matrix& h, double tau) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const auto& v = es.eigenvectors();
  Vector phases(h.rows());
  for (long i = 0; i < h.rows(); ++i)
    phases[i] = std::exp(complexd(0, -es.eigenvalues()[i] * tau));
  return v * phases.asDiagonal() * v.adjoint();
}

Matrix displacement_operator(const FockBasis& basis, complexd alpha) {
  const int d = basis.mode_dim();
  Matrix a = Matrix::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(double(n));
  const Matrix k = alpha * a.adjoint() - std::conj(alpha) * a;
  return exp_i_hermitian(complexd(0, 1) * k, 1.0);
}

SpinMotionState displace(const SpinMotionState& state, int mode,
                         complexd alpha) {
  if (std::norm(alpha) > state.basis.n_max / 4.0)
    throw PhysicsError("displace: |alpha|^2 exceeds n_max/4 leakage guard");
  return hilbert::apply_mode(displacement_operator(state.basis, alpha), state,
                             mode);
}

// ---------------------------------------------------------------------------
// Krylov exponential
// ---------------------------------------------------------------------------

Vector krylov_exp_apply(const std::function<void(const Vector&, Vector&)>& K,
                        const Vector& v, double tau, double tol) {
  const double beta0 = v.norm();
  if (beta0 == 0.0 || tau == 0.0) return v;
  constexpr int m_max = 48;
  const long n = v.size();

  Matrix basis(n, m_max + 1);
  Eigen::VectorXd alpha(m_max), beta(m_max);
  basis.col(0) = v / beta0;
  Vector w(n);

  int m = 0;
  bool converged = false;
  Eigen::VectorXcd small_exp;
  for (int j = 0; j < m_max; ++j) {
    K(basis.col(j), w);
    complexd a = basis.col(j).dot(w);
    alpha[j] = a.real();
    w -= a * basis.col(j);
    if (j > 0) w -= complexd(beta[j - 1]) * basis.col(j - 1);
    // full reorthogonalization
    for (int i = 0; i <= j; ++i) w -= basis.col(i).dot(w) * basis.col(i);
    beta[j] = w.norm();
    m = j + 1;

    // small problem: exp(-i tau T_m) e1
    Eigen::MatrixXd tm = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      tm(i, i) = alpha[i];
      if (i + 1 < m) tm(i, i + 1) = tm(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tm);
    Eigen::VectorXcd u(m);
    u.setZero();
    for (int i = 0; i < m; ++i) {
      const complexd ph = std::exp(complexd(0, -es.eigenvalues()[i] * tau));
      u += ph * es.eigenvectors()(0, i) * es.eigenvectors().col(i).cast<complexd>();
    }
    small_exp = u;
    const double err = beta[j] * std::abs(u[m - 1]) * std::abs(tau);
    if (beta[j] < 1e-14 || err < tol) {
      converged = true;
      break;
    }
    basis.col(j + 1) = w / beta[j];
  }

  if (!converged) {
    // subdivide the interval
    Vector half = krylov_exp_apply(K, v, tau / 2, tol);
    return krylov_exp_apply(K, half, tau / 2, tol);
  }
  return beta0 * (basis.leftCols(m) * small_exp);
}

// ---------------------------------------------------------------------------
// Evolution
// ---------------------------------------------------------------------------

namespace {

Vector midpoint_step(const HamiltonianModel& model, const Vector& psi,
                     double t0, double h, double tol) {
  const double tm = t0 + 0.5 * h;
  auto K = [&](const Vector& x, Vector& y) { model.apply(tm, x, y); };
  return krylov_exp_apply(K, psi, h, tol);
}

}  // namespace

SpinMotionState evolve_numeric(const HamiltonianModel& model,
                               const SpinMotionState& state, double t_final,
                               double dt, const EvolveOptions& opts) {
  if (model.dim() != state.dim())
    throw PhysicsError("evolve_numeric: model/state dimension mismatch");
  if (dt <= 0) throw PhysicsError("evolve_numeric: dt must be positive");
  const double hmax = model.max_abs_entry();
  if (dt * hmax > 0.05 * (1 + 1e-12))
    throw PhysicsError("evolve_numeric: dt too coarse, need dt*max|H| <= 0.05");

  SpinMotionState out = state;
  const double norm0 = out.amplitudes.norm();
  double t = 0;
  while (t < t_final - 1e-15 * t_final) {
    const double h = std::min(dt, t_final - t);
    Vector coarse = midpoint_step(model, out.amplitudes, t, h, opts.krylov_tol);
    Vector fine =
        midpoint_step(model, out.amplitudes, t, 0.5 * h, opts.krylov_tol);
    fine = midpoint_step(model, fine, t + 0.5 * h, 0.5 * h, opts.krylov_tol);
    const double err = (fine - coarse).norm();
    if (err > opts.step_error_tol)
      throw ConvergenceError(
          "evolve_numeric: embedded half-step error " + std::to_string(err) +
          " exceeds tolerance; reduce dt");
    out.amplitudes = std::move(fine);
    t += h;
  }
  if (opts.check_norm &&
      std::abs(out.amplitudes.norm() - norm0) > 1e-8 * std::max(1.0, norm0))
    throw ConvergenceError("evolve_numeric: norm drift detected");
  return out;
}

SpinMotionState evolve_exact_frame(const HamiltonianModel& model,
                                   const SpinMotionState& state,
                                   double t_final, const EvolveOptions& opts) {
  if (model.dim() != state.dim())
    throw PhysicsError("evolve_exact_frame: model/state dimension mismatch");
  auto g = model.frame_generator();
  if (!g)
    throw PhysicsError("evolve_exact_frame: model has no single rotating "
                       "frame");
  const double delta = model.delta();
  // spectral centering of the constant generator K0 + delta G
  double gmin = 0, gmax = 0;
  if (g->size() > 0) {
    gmin = g->real().minCoeff();
    gmax = g->real().maxCoeff();
  }
  const double mu = delta * 0.5 * (gmin + gmax);
  auto K = [&](const Vector& x, Vector& y) {
    model.apply(0.0, x, y);
    y += delta * g->cwiseProduct(x);
    y -= mu * x;
  };
  SpinMotionState out = state;
  out.amplitudes =
      krylov_exp_apply(K, state.amplitudes, t_final, opts.krylov_tol);
  const complexd global = std::exp(complexd(0, -mu * t_final));
  for (long i = 0; i < out.amplitudes.size(); ++i)
    out.amplitudes[i] *= global * std::exp(complexd(
                             0, delta * t_final * (*g)[i].real()));
  return out;
}

SpinMotionState evolve(const HamiltonianModel& model,
                       const SpinMotionState& state, double t_final,
                       const EvolveOptions& opts) {
  if (model.frame_generator())
    return evolve_exact_frame(model, state, t_final, opts);
  const double hmax = std::max(model.max_abs_entry(),
                               std::abs(model.delta()));
  const double dt = hmax > 0 ? 0.05 / hmax : t_final;
  return evolve_numeric(model, state, t_final, dt, opts);
}

}  // namespace dynamics
}  // namespace iongate
