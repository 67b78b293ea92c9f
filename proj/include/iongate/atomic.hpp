#pragma once

// Hyperfine + Zeeman eigensystem of an S_1/2 ground state with nuclear spin
// I, magnetic-field-insensitive ("clock") level pairs, and AC Stark shifts.
//
// H/hbar = (mu_B B / hbar)(g_J J_z + g_I I_z) + A I.J with A in rad/s and
// dimensionless g-factors; energies are returned in rad/s.

#include <optional>
#include <vector>

#include "iongate/hilbert.hpp"

namespace iongate {
namespace atomic {

struct HyperfineSystem {
  double nuclear_spin = 0.5;  // I, half-integer
  double hyperfine_constant = 0;  // A, rad/s
  double g_j = 2.0;
  double g_i = 0.0;
  double field = 0;  // B, tesla

  void validate() const;
};

struct HyperfineLevel {
  double m_f = 0;
  double energy = 0;  // rad/s
  // amplitudes on |m_J=+1/2, m_I=m_F-1/2> and |m_J=-1/2, m_I=m_F+1/2>
  double a = 0;
  double b = 0;
  int branch = 0;  // 0 = lower, 1 = upper eigenvalue of the m_F block
};

// Exact diagonalization of the 2x2 blocks per m_F (1x1 for stretched
// states); (2I+1)(2J+1) levels, energies continuous in B.
std::vector<HyperfineLevel> eigensystem(const HyperfineSystem& system);

// Ehrenfest derivative dE/dB in rad/s per tesla:
// (mu_B/hbar)[ |a|^2 (g_J/2 + g_I (m_F - 1/2))
//            + |b|^2 (-g_J/2 + g_I (m_F + 1/2)) ].
double dE_dB(const HyperfineLevel& level, const HyperfineSystem& system);

struct InsensitivePair {
  double m_f_1 = 0;
  int branch_1 = 0;
  double m_f_2 = 0;
  int branch_2 = 0;
  double field = 0;  // B* where d(E1-E2)/dB = 0
  bool degenerate_root = false;  // flat or double root flagged by the scan
};

// All roots of d(E1 - E2)/dB over [b_min, b_max] for every distinct level
// pair, by sign-change bracketing on a grid plus bisection.
std::vector<InsensitivePair> field_insensitive_pairs(HyperfineSystem system,
                                                     double b_min,
                                                     double b_max,
                                                     int grid_points = 512);

HyperfineLevel find_level(const std::vector<HyperfineLevel>& levels,
                          double m_f, int branch);

// AC Stark shift chi = |a|^2 S+ / (Delta - E_ref + E) +
//                      |b|^2 S- / (Delta - E_ref + E)
// with S+- the summed squared couplings from m_J = +-1/2 and E_ref the
// energy of the level the detuning is measured from.
double stark_shift(const HyperfineLevel& level, double detuning,
                   double coupling_plus, double coupling_minus,
                   double reference_energy = 0.0);

}  // namespace atomic
}  // namespace iongate
