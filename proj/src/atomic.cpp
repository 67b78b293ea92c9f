#include "iongate/atomic.hpp"

#include <algorithm>
#include <cmath>

namespace iongate {
namespace atomic {

using constants::mu_b_over_hbar;

void HyperfineSystem::validate() const {
  const double twice = 2.0 * nuclear_spin;
  if (nuclear_spin < 0.5 || std::abs(twice - std::round(twice)) > 1e-9)
    throw PhysicsError("HyperfineSystem: I must be a positive half-integer");
  if (g_j == g_i)
    throw PhysicsError("HyperfineSystem: g_J = g_I is degenerate");
}

namespace {

struct Block {
  double m_f;
  bool has_plus;   // |m_J=+1/2, m_I=m_F-1/2> exists
  bool has_minus;  // |m_J=-1/2, m_I=m_F+1/2> exists
};

std::vector<Block> blocks_of(double I) {
  std::vector<Block> blocks;
  for (double m_f = -(I + 0.5); m_f <= I + 0.5 + 1e-9; m_f += 1.0) {
    Block b;
    b.m_f = m_f;
    b.has_plus = std::abs(m_f - 0.5) <= I + 1e-9;
    b.has_minus = std::abs(m_f + 0.5) <= I + 1e-9;
    blocks.push_back(b);
  }
  return blocks;
}

}  // namespace

std::vector<HyperfineLevel> eigensystem(const HyperfineSystem& sys) {
  sys.validate();
  if (sys.field < 0) throw PhysicsError("eigensystem: B must be >= 0");
  const double I = sys.nuclear_spin;
  const double A = sys.hyperfine_constant;
  const double b = mu_b_over_hbar * sys.field;

  std::vector<HyperfineLevel> levels;
  for (const auto& blk : blocks_of(I)) {
    const double m_f = blk.m_f;
    const double h11 =
        b * (sys.g_j / 2 + sys.g_i * (m_f - 0.5)) + A * 0.5 * (m_f - 0.5);
    const double h22 =
        b * (-sys.g_j / 2 + sys.g_i * (m_f + 0.5)) - A * 0.5 * (m_f + 0.5);
    if (blk.has_plus && blk.has_minus) {
      const double h12 = 0.5 * A * std::sqrt((I + 0.5) * (I + 0.5) - m_f * m_f);
      const double mean = 0.5 * (h11 + h22);
      const double diff = 0.5 * (h11 - h22);
      const double r = std::sqrt(diff * diff + h12 * h12);
      // eigenvectors of [[h11, h12],[h12, h22]]
      for (int branch = 0; branch < 2; ++branch) {
        const double e = branch == 0 ? mean - r : mean + r;
        HyperfineLevel lvl;
        lvl.m_f = m_f;
        lvl.branch = branch;
        lvl.energy = e;
        const double va = h12;
        const double vb = e - h11;
        const double n = std::hypot(va, vb);
        if (n < 1e-300 * std::abs(A)) {
          lvl.a = branch == 0 ? (h11 < h22 ? 1 : 0) : (h11 < h22 ? 0 : 1);
          lvl.b = 1 - lvl.a;
        } else {
          lvl.a = va / n;
          lvl.b = vb / n;
        }
        levels.push_back(lvl);
      }
    } else if (blk.has_plus) {
      levels.push_back({m_f, h11, 1.0, 0.0, 0});
    } else {
      levels.push_back({m_f, h22, 0.0, 1.0, 0});
    }
  }
  return levels;
}

double dE_dB(const HyperfineLevel& level, const HyperfineSystem& sys) {
  return mu_b_over_hbar *
         (level.a * level.a *
              (sys.g_j / 2 + sys.g_i * (level.m_f - 0.5)) +
          level.b * level.b *
              (-sys.g_j / 2 + sys.g_i * (level.m_f + 0.5)));
}

HyperfineLevel find_level(const std::vector<HyperfineLevel>& levels,
                          double m_f, int branch) {
  for (const auto& l : levels)
    if (std::abs(l.m_f - m_f) < 1e-9 && l.branch == branch) return l;
  throw PhysicsError("find_level: no such level");
}

std::vector<InsensitivePair> field_insensitive_pairs(HyperfineSystem sys,
                                                     double b_min,
                                                     double b_max,
                                                     int grid_points) {
  sys.validate();
  if (!(b_max > b_min) || b_min < 0)
    throw PhysicsError("field_insensitive_pairs: bad field range");

  struct Label {
    double m_f;
    int branch;
  };
  std::vector<Label> labels;
  {
    sys.field = b_min;
    for (const auto& l : eigensystem(sys)) labels.push_back({l.m_f, l.branch});
  }
  auto slope_diff = [&](const Label& l1, const Label& l2, double field) {
    sys.field = field;
    const auto levels = eigensystem(sys);
    return dE_dB(find_level(levels, l1.m_f, l1.branch), sys) -
           dE_dB(find_level(levels, l2.m_f, l2.branch), sys);
  };

  // slope magnitudes are of order mu_B g / hbar; below this a computed
  // difference is numerically zero
  const double zero_tol =
      1e-12 * mu_b_over_hbar * (std::abs(sys.g_j) + std::abs(sys.g_i));

  std::vector<InsensitivePair> pairs;
  for (size_t i = 0; i < labels.size(); ++i)
    for (size_t j = i + 1; j < labels.size(); ++j) {
      double last_root = -1e300;
      double prev_b = b_min;
      double prev_g = slope_diff(labels[i], labels[j], prev_b);
      for (int k = 1; k <= grid_points; ++k) {
        const double cur_b = b_min + (b_max - b_min) * k / grid_points;
        const double cur_g = slope_diff(labels[i], labels[j], cur_b);
        const bool at_zero = std::abs(prev_g) <= zero_tol;
        const bool crossing = at_zero || prev_g * cur_g < 0;
        if (crossing) {
          double lo = prev_b, hi = cur_b, glo = prev_g;
          if (at_zero) {
            hi = lo;
          } else {
            for (int it = 0; it < 200; ++it) {
              const double mid = 0.5 * (lo + hi);
              const double gm = slope_diff(labels[i], labels[j], mid);
              if (std::abs(gm) <= zero_tol) {
                lo = hi = mid;
                break;
              }
              if (glo * gm < 0)
                hi = mid;
              else {
                lo = mid;
                glo = gm;
              }
              if (hi - lo <= 1e-10 * std::max(1e-30, hi)) break;
            }
          }
          const double root = 0.5 * (lo + hi);
          if (root - last_root >
              1e-9 * (b_max - b_min) + 1e-18) {
            InsensitivePair p;
            p.m_f_1 = labels[i].m_f;
            p.branch_1 = labels[i].branch;
            p.m_f_2 = labels[j].m_f;
            p.branch_2 = labels[j].branch;
            p.field = root;
            p.degenerate_root =
                std::abs(cur_g) <= zero_tol && std::abs(prev_g) <= zero_tol;
            pairs.push_back(p);
            last_root = root;
          }
        }
        prev_b = cur_b;
        prev_g = cur_g;
      }
    }
  return pairs;
}

double stark_shift(const HyperfineLevel& level, double detuning,
                   double coupling_plus, double coupling_minus,
                   double reference_energy) {
  const double denom = detuning - reference_energy + level.energy;
  const double scale = std::abs(detuning) + std::abs(reference_energy) +
                       std::abs(level.energy);
  if (std::abs(denom) <= 1e-12 * scale || scale == 0.0)
    throw PhysicsError("stark_shift: resonant denominator");
  return (level.a * level.a * coupling_plus +
          level.b * level.b * coupling_minus) /
         denom;
}

}  // namespace atomic
}  // namespace iongate
