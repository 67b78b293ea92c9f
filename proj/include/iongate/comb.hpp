#pragma once

// Electro-optic-modulator frequency combs: path-length-dependent Raman
// transition rates, Delta k-reversal frequency planning, and spectrum
// synthesis.

#include <string>
#include <vector>

#include "iongate/hilbert.hpp"

namespace iongate {
namespace comb {

struct CombConfig {
  double modulation_index = 0;      // phi, rad
  double modulation_frequency = 0;  // omega_EO, rad/s
  double path_length_difference = 0;  // Delta x, m
  double modulation_wavenumber = 0;   // delta k, 1/m
  double offset_a = 0;  // omega_offset per path, rad/s
  double offset_b = 0;

  // theta = (delta k * Delta x) mod 2 pi, in [0, 2 pi)
  double theta() const;
};

// Bessel function of the first kind, integer order; power series for small
// arguments, Miller's downward recurrence beyond.
double bessel_j(int n, double x);

// Relative Raman rate between the carrier and the k-th comb sideband:
// J_k(2 phi sin theta), normalized to J_0(0) = 1.
double transition_rate(int k, double phi, double theta);

// The defining comb sum  sum_n J_n(phi) e^{i n theta} J_{n+k}(phi)
// e^{i (n+k) theta}, truncated at |n| <= n_terms (oracle form). The sum
// carries a residual phase relative to the rate: it equals
// i^k J_k(2 phi sin theta).
complexd transition_rate_series(int k, double phi, double theta,
                                int n_terms = 200);

struct DeltaKPlan {
  double path_a_shift = 0;  // rad/s
  double path_b_shift = 0;
  int delta_k_sign = 1;  // +1: k_B - k_A, -1: k_A - k_B
};

// Frequency-shift assignment that makes a comb-line pair match `transition`
// with the requested Delta k direction. Rejects omega_EO exactly on the
// transition (copropagating carrier).
DeltaKPlan plan_delta_k(double transition, double omega_eo,
                        double omega_offset, int desired_sign);

struct SpectrumLine {
  double frequency = 0;  // rad/s beat frequency (signed)
  std::string label;     // C, R1, B1, R2, B2
  bool overlaps = false;
};

// Beat-frequency positions of the carrier and first sidebands of both modes:
// carrier at +-off, red_nu at +-(off + omega_nu), blue_nu at +-(off -
// omega_nu), with off = omega_EO - omega_0. Lines closer than `resolution`
// are flagged, not merged.
std::vector<SpectrumLine> raman_spectrum(double omega_1, double omega_2,
                                         double beat_offset,
                                         double resolution = 0.0);

}  // namespace comb
}  // namespace iongate
