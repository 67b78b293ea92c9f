#include "iongate/hilbert.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace iongate {
namespace hilbert {

Matrix sigma_plus() {
  Matrix m = Matrix::Zero(2, 2);
  m(kSpinUp, kSpinDown) = 1.0;
  return m;
}

Matrix sigma_minus() { return sigma_plus().adjoint(); }

Matrix sigma_x() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

Matrix sigma_y() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = complexd(0, -1);
  m(1, 0) = complexd(0, 1);
  return m;
}

Matrix sigma_z() {
  Matrix m = Matrix::Zero(2, 2);
  m(kSpinUp, kSpinUp) = 1.0;
  m(kSpinDown, kSpinDown) = -1.0;
  return m;
}

Matrix spin_projector(int spin) {
  Matrix m = Matrix::Zero(2, 2);
  m(spin, spin) = 1.0;
  return m;
}

std::pair<Matrix, Matrix> build_ladder(const FockBasis& basis, int mode) {
  if (mode != 1 && mode != 2)
    throw PhysicsError("build_ladder: mode must be 1 or 2");
  const int d = basis.mode_dim();
  Matrix a = Matrix::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(double(n));
  return {a, a.adjoint()};
}

Matrix tensor(const std::vector<Matrix>& factors) {
  if (factors.empty()) throw PhysicsError("tensor: no factors");
  long dim = 1;
  for (const auto& f : factors) {
    if (f.rows() != f.cols()) throw PhysicsError("tensor: non-square factor");
    dim *= f.rows();
    if (dim > kTensorDimensionCap)
      throw PhysicsError("tensor: dimension exceeds cap");
  }
  Matrix out = factors[0];
  for (size_t i = 1; i < factors.size(); ++i)
    out = Eigen::kroneckerProduct(out, factors[i]).eval();
  return out;
}

Vector tensor_states(const std::vector<Vector>& factors) {
  if (factors.empty()) throw PhysicsError("tensor_states: no factors");
  long dim = 1;
  for (const auto& f : factors) {
    dim *= f.size();
    if (dim > kTensorDimensionCap)
      throw PhysicsError("tensor_states: dimension exceeds cap");
  }
  Vector out = factors[0];
  for (size_t i = 1; i < factors.size(); ++i) {
    Vector next(out.size() * factors[i].size());
    for (long j = 0; j < out.size(); ++j)
      next.segment(j * factors[i].size(), factors[i].size()) =
          out[j] * factors[i];
    out = std::move(next);
  }
  return out;
}

Matrix lift_spin(const Matrix& op, int ion, int qubit_count,
                 const FockBasis& basis) {
  if (ion < 1 || ion > qubit_count) throw PhysicsError("lift_spin: bad ion");
  const int d = basis.mode_dim();
  const Matrix id2 = Matrix::Identity(2, 2);
  const Matrix idm = Matrix::Identity(d, d);
  std::vector<Matrix> f;
  for (int q = 1; q <= qubit_count; ++q) f.push_back(q == ion ? op : id2);
  f.push_back(idm);
  f.push_back(idm);
  return tensor(f);
}

Matrix lift_mode(const Matrix& op, int mode, int qubit_count,
                 const FockBasis& basis) {
  if (mode != 1 && mode != 2) throw PhysicsError("lift_mode: bad mode");
  const int d = basis.mode_dim();
  const Matrix id2 = Matrix::Identity(2, 2);
  const Matrix idm = Matrix::Identity(d, d);
  std::vector<Matrix> f;
  for (int q = 0; q < qubit_count; ++q) f.push_back(id2);
  f.push_back(mode == 1 ? op : idm);
  f.push_back(mode == 2 ? op : idm);
  return tensor(f);
}

complexd overlap(const SpinMotionState& a, const SpinMotionState& b) {
  if (!(a.basis == b.basis) || a.qubit_count != b.qubit_count)
    throw PhysicsError("overlap: mismatched state spaces");
  return a.amplitudes.dot(b.amplitudes);  // conjugates a
}

double fidelity(const SpinMotionState& a, const SpinMotionState& b) {
  return std::norm(overlap(a, b));
}

double reduced_spin_purity(const SpinMotionState& state) {
  const int ns = state.spin_dim();
  const long dm = state.basis.motional_dim();
  // amplitudes are spin-major: row s holds the motional block of spin s
  Eigen::Map<const Eigen::Matrix<complexd, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      psi(state.amplitudes.data(), ns, dm);
  Matrix rho = psi * psi.adjoint();
  return (rho * rho).trace().real();
}

TruncationReport truncation_report(const SpinMotionState& state, int margin) {
  TruncationReport rep;
  const int d = state.basis.mode_dim();
  const int cut = state.basis.n_max - margin;
  for (int s = 0; s < state.spin_dim(); ++s)
    for (int n1 = 0; n1 < d; ++n1)
      for (int n2 = 0; n2 < d; ++n2) {
        const double p = std::norm(state.amplitudes[state.index(s, n1, n2)]);
        if (p > 1e-12) {
          rep.max_populated_n1 = std::max(rep.max_populated_n1, n1);
          rep.max_populated_n2 = std::max(rep.max_populated_n2, n2);
        }
        if (n1 > cut || n2 > cut) rep.tail_population += p;
      }
  return rep;
}

SpinMotionState apply(const Matrix& op, const SpinMotionState& state) {
  if (op.cols() != state.dim())
    throw PhysicsError("apply: operator/state dimension mismatch");
  SpinMotionState out = state;
  out.amplitudes = op * state.amplitudes;
  return out;
}

using RowMat =
    Eigen::Matrix<complexd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

SpinMotionState apply_mode(const Matrix& op, const SpinMotionState& state,
                           int mode) {
  const int d = state.basis.mode_dim();
  if (op.rows() != d || op.cols() != d)
    throw PhysicsError("apply_mode: operator must act on one mode");
  if (mode != 1 && mode != 2) throw PhysicsError("apply_mode: bad mode");
  SpinMotionState out = state;
  if (mode == 2) {
    // index = (s*d + n1)*d + n2: rows (s, n1), columns n2
    Eigen::Map<const RowMat> in(state.amplitudes.data(),
                                state.spin_dim() * d, d);
    Eigen::Map<RowMat> o(out.amplitudes.data(), state.spin_dim() * d, d);
    o = in * op.transpose();
  } else {
    for (int s = 0; s < state.spin_dim(); ++s) {
      Eigen::Map<const RowMat> in(state.amplitudes.data() + long(s) * d * d, d,
                                  d);
      Eigen::Map<RowMat> o(out.amplitudes.data() + long(s) * d * d, d, d);
      o = op * in;
    }
  }
  return out;
}

SpinMotionState apply_spin(const Matrix& op, const SpinMotionState& state,
                           int ion) {
  if (op.rows() != 2 || op.cols() != 2)
    throw PhysicsError("apply_spin: operator must be 2x2");
  if (ion < 1 || ion > state.qubit_count)
    throw PhysicsError("apply_spin: ion out of range");
  const long dm = state.basis.motional_dim();
  SpinMotionState out = state;
  out.amplitudes.setZero();
  const int ns = state.spin_dim();
  for (int s = 0; s < ns; ++s) {
    // spin index bit of the addressed ion (MSB = ion 1)
    const int bit = state.qubit_count - ion;
    const int si = (s >> bit) & 1;
    for (int si_new = 0; si_new < 2; ++si_new) {
      const complexd c = op(si_new, si);
      if (c == complexd(0.0)) continue;
      const int s_new = (s & ~(1 << bit)) | (si_new << bit);
      out.amplitudes.segment(s_new * dm, dm) +=
          c * state.amplitudes.segment(s * dm, dm);
    }
  }
  return out;
}

}  // namespace hilbert
}  // namespace iongate
