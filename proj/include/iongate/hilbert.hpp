#pragma once

// Truncated spin (x) Fock Hilbert space: states, dense operators, tensor
// products and the metrics used by the dynamics and gate layers.
//
// Basis ordering (fixed, used by every module):
//   index = (spin * (n_max+1) + n1) * (n_max+1) + n2
// Spin indices vary slowest, mode-1 Fock index next, mode-2 fastest.
// For two qubits spin = 2*s1 + s2 with s_i = 0 for |up>, 1 for |down>.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "iongate/constants.hpp"

namespace iongate {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Errors carrying the CLI exit-code semantics.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PhysicsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace hilbert {

inline constexpr int kSpinUp = 0;
inline constexpr int kSpinDown = 1;

struct FockBasis {
  int n_max = 1;                 // highest retained vibrational quantum number
  static constexpr int mode_count = 2;  // center-of-mass, stretch

  explicit FockBasis(int n_max_) : n_max(n_max_) {
    if (n_max < 1) throw PhysicsError("FockBasis: n_max must be >= 1");
  }
  int mode_dim() const { return n_max + 1; }
  long motional_dim() const { return long(mode_dim()) * mode_dim(); }
  bool operator==(const FockBasis& o) const { return n_max == o.n_max; }
};

struct SpinMotionState {
  FockBasis basis;
  int qubit_count = 1;  // 1 or 2
  Vector amplitudes;

  SpinMotionState(FockBasis b, int qubits)
      : basis(b), qubit_count(qubits),
        amplitudes(Vector::Zero(spin_dim() * b.motional_dim())) {
    if (qubits != 1 && qubits != 2)
      throw PhysicsError("SpinMotionState: qubit_count must be 1 or 2");
  }

  int spin_dim() const { return 1 << qubit_count; }
  long dim() const { return amplitudes.size(); }

  long index(int spin, int n1, int n2) const {
    const int d = basis.mode_dim();
    return (long(spin) * d + n1) * d + n2;
  }

  double norm() const { return amplitudes.norm(); }

  // |spin> (x) |n1, n2>
  static SpinMotionState basis_state(FockBasis b, int qubits, int spin,
                                     int n1, int n2) {
    SpinMotionState s(b, qubits);
    s.amplitudes[s.index(spin, n1, n2)] = 1.0;
    return s;
  }
};

// Dense operator checks ------------------------------------------------------

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
  return (u.adjoint() * u - Matrix::Identity(u.cols(), u.cols()))
             .cwiseAbs()
             .maxCoeff() <= tol;
}

inline bool is_hermitian(const Matrix& h, double tol = 1e-12) {
  return (h - h.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

// Single-qubit operators on the (|up>, |down>) ordering.
Matrix sigma_plus();   // |up><down|
Matrix sigma_minus();  // |down><up|
Matrix sigma_x();
Matrix sigma_y();
Matrix sigma_z();
Matrix spin_projector(int spin);  // |spin><spin|

// Ladder pair on a single truncated mode: a|n> = sqrt(n)|n-1>,
// adag|n> = sqrt(n+1)|n+1>, hard-truncated at n_max.
std::pair<Matrix, Matrix> build_ladder(const FockBasis& basis, int mode);

// Kronecker product in the fixed ordering (first factor slowest).
// Guarded by the total-dimension cap.
inline constexpr long kTensorDimensionCap = 1L << 20;

Matrix tensor(const std::vector<Matrix>& factors);
Vector tensor_states(const std::vector<Vector>& factors);

// Lift a single-mode or single-spin operator to the full space of `state`
// layout: op acts on slot `slot` of (spin1[, spin2], mode1, mode2) where
// spin slots are 2-dim and mode slots mode_dim.
Matrix lift_spin(const Matrix& op, int ion, int qubit_count,
                 const FockBasis& basis);
Matrix lift_mode(const Matrix& op, int mode, int qubit_count,
                 const FockBasis& basis);

// State metrics --------------------------------------------------------------

double fidelity(const SpinMotionState& a, const SpinMotionState& b);
complexd overlap(const SpinMotionState& a, const SpinMotionState& b);

// Traces out both motional modes and returns Tr(rho_spin^2).
double reduced_spin_purity(const SpinMotionState& state);

// Truncation diagnostics: population per Fock level and the leakage into the
// top `margin` levels of either mode.
struct TruncationReport {
  int max_populated_n1 = 0;  // highest level with population > 1e-12
  int max_populated_n2 = 0;
  double tail_population = 0.0;  // population with n1 or n2 > n_max - margin
};
TruncationReport truncation_report(const SpinMotionState& state,
                                   int margin = 5);

SpinMotionState apply(const Matrix& op, const SpinMotionState& state);

// Applies a single-mode operator (mode_dim x mode_dim) on one mode, or a
// 2x2 spin operator on one ion, without forming the full Kronecker product.
SpinMotionState apply_mode(const Matrix& op, const SpinMotionState& state,
                           int mode);
SpinMotionState apply_spin(const Matrix& op, const SpinMotionState& state,
                           int ion);

}  // namespace hilbert
}  // namespace iongate
