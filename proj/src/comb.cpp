#include "iongate/comb.hpp"

#include <cmath>

namespace iongate {
namespace comb {

using constants::two_pi;

double CombConfig::theta() const {
  double t = std::fmod(modulation_wavenumber * path_length_difference, two_pi);
  if (t < 0) t += two_pi;
  return t;
}

namespace {

double bessel_j_series(int n, double x) {
  // J_n(x) = sum_k (-1)^k (x/2)^{n+2k} / (k! (n+k)!); the alternating terms
  // grow before they decay, so accumulate in extended precision
  const long double half = (long double)x / 2;
  const double log_t0 =
      n * std::log(x / 2) - std::lgamma(double(n) + 1.0);
  if (log_t0 < -745.0) return 0.0;  // below double underflow, J_n ~ 0
  long double term = expl((long double)log_t0);
  long double sum = term;
  for (int k = 1; k <= 260; ++k) {
    term *= -(half * half) / ((long double)k * (long double)(n + k));
    sum += term;
    if (fabsl(term) < 1e-22L * std::max(1.0L, fabsl(sum)) && k > 4) break;
  }
  return double(sum);
}

double bessel_j_miller(int n, double x) {
  // downward recurrence normalized by J_0 + 2 sum J_{2k} = 1
  const int start = n + int(std::sqrt(40.0 * n)) + int(x) + 60;
  const int m = start % 2 == 0 ? start : start + 1;
  double jp = 0.0, jc = 1e-30;
  double norm = 0.0, jn = 0.0;
  for (int k = m; k >= 1; --k) {
    const double jm = 2.0 * k / x * jc - jp;
    jp = jc;
    jc = jm;
    if (k - 1 == n) jn = jc;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * jc;
    if (std::abs(jc) > 1e250) {
      jc *= 1e-250;
      jp *= 1e-250;
      jn *= 1e-250;
      norm *= 1e-250;
    }
  }
  norm += jc;
  return jn / norm;
}

}  // namespace

double bessel_j(int n, double x) {
  double sign = 1.0;
  if (n < 0) {
    n = -n;
    if (n % 2 == 1) sign = -sign;
  }
  if (x < 0) {
    x = -x;
    if (n % 2 == 1) sign = -sign;
  }
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (x <= 12.0 || x < n) return sign * bessel_j_series(n, x);
  return sign * bessel_j_miller(n, x);
}

double transition_rate(int k, double phi, double theta) {
  return bessel_j(k, 2.0 * phi * std::sin(theta));
}

complexd transition_rate_series(int k, double phi, double theta, int n_terms) {
  complexd sum = 0;
  for (int n = -n_terms; n <= n_terms; ++n) {
    const double jj = bessel_j(n, phi) * bessel_j(n + k, phi);
    if (jj == 0.0) continue;
    sum += jj * std::exp(complexd(0, (2.0 * n + k) * theta));
  }
  return sum;
}

DeltaKPlan plan_delta_k(double transition, double omega_eo,
                        double omega_offset, int desired_sign) {
  if (omega_eo <= 0)
    throw PhysicsError("plan_delta_k: modulation frequency must be positive");
  if (omega_eo == transition)
    throw PhysicsError("plan_delta_k: omega_EO exactly on the transition "
                       "drives a copropagating carrier; detune it");
  if (desired_sign != 1 && desired_sign != -1)
    throw PhysicsError("plan_delta_k: desired_sign must be +-1");
  DeltaKPlan plan;
  plan.path_a_shift = omega_offset;
  plan.delta_k_sign = desired_sign;
  plan.path_b_shift = desired_sign == 1
                          ? omega_offset + transition - omega_eo
                          : omega_offset + omega_eo - transition;
  return plan;
}

std::vector<SpectrumLine> raman_spectrum(double omega_1, double omega_2,
                                         double beat_offset,
                                         double resolution) {
  if (omega_1 < 0 || omega_2 < 0)
    throw PhysicsError("raman_spectrum: mode frequencies must be >= 0");
  std::vector<SpectrumLine> lines;
  auto emit = [&](double f, const std::string& label) {
    lines.push_back({f, label, false});
    lines.push_back({-f, label, false});
  };
  emit(beat_offset, "C");
  const double modes[2] = {omega_1, omega_2};
  for (int nu = 0; nu < 2; ++nu) {
    if (modes[nu] == 0.0) continue;  // sidebands collapse onto the carrier
    emit(beat_offset + modes[nu], "R" + std::to_string(nu + 1));
    emit(beat_offset - modes[nu], "B" + std::to_string(nu + 1));
  }
  if (resolution > 0) {
    for (size_t i = 0; i < lines.size(); ++i)
      for (size_t j = i + 1; j < lines.size(); ++j)
        if (std::abs(lines[i].frequency - lines[j].frequency) < resolution) {
          lines[i].overlaps = true;
          lines[j].overlaps = true;
        }
  }
  return lines;
}

}  // namespace comb
}  // namespace iongate
