#pragma once

// Multilayer level-set function: one scalar field whose i_n-level-sets carry
// N nested interfaces. Near each level the field is a signed distance clamped
// to +-di/2 around i_n.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <sstream>
#include <vector>

#include "mlsm/errors.hpp"
#include "mlsm/grid_fields.hpp"

namespace mlsm {

class LevelSequence {
 public:
  LevelSequence() = default;

  /// Validates an explicit list; a single level needs an explicit spacing.
  explicit LevelSequence(std::vector<double> levels, double spacing = 0.0)
      : levels_(std::move(levels)), spacing_(spacing) {
    if (levels_.empty()) throw ConfigError("level sequence needs at least one level");
    if (levels_.size() >= 2) {
      spacing_ = levels_[1] - levels_[0];
      for (std::size_t n = 1; n < levels_.size(); ++n) {
        const double d = levels_[n] - levels_[n - 1];
        if (!(d > 0.0)) throw ConfigError("levels must be strictly increasing");
        if (std::abs(d - spacing_) > 1e-12 * std::max(1.0, std::abs(spacing_))) {
          throw ConfigError("levels must form an arithmetic sequence");
        }
      }
    }
    if (!(spacing_ > 0.0)) throw ConfigError("level spacing must be positive");
  }

  static LevelSequence Arithmetic(double first, double spacing, std::size_t count) {
    std::vector<double> lv(count);
    for (std::size_t n = 0; n < count; ++n) lv[n] = first + spacing * static_cast<double>(n);
    return LevelSequence(std::move(lv), spacing);
  }

  std::size_t size() const { return levels_.size(); }
  double operator[](std::size_t n) const { return levels_[n]; }
  double spacing() const { return spacing_; }
  double half() const { return 0.5 * spacing_; }
  double front() const { return levels_.front(); }
  double back() const { return levels_.back(); }
  const std::vector<double>& values() const { return levels_; }

  /// argmin_n |v - i_n|, ties toward the smaller n.
  std::size_t nearest(double v) const {
    std::size_t best = 0;
    double dbest = std::abs(v - levels_[0]);
    for (std::size_t n = 1; n < levels_.size(); ++n) {
      const double d = std::abs(v - levels_[n]);
      if (d < dbest) {
        dbest = d;
        best = n;
      }
    }
    return best;
  }

  /// min_n |v - i_n|.
  double distance(double v) const { return std::abs(v - levels_[nearest(v)]); }

 private:
  std::vector<double> levels_;
  double spacing_ = 0.0;
};

struct MultilayerLevelSet {
  ScalarField phi;
  LevelSequence levels;

  const Grid2D& grid() const { return phi.grid(); }
  std::size_t num_levels() const { return levels.size(); }
};

/// phi = i_m + clamp(d_m, -di/2, di/2) with m = argmin_n |d_n| (ties toward
/// the smaller n).
inline MultilayerLevelSet BuildFromDistances(const std::vector<ScalarField>& distances,
                                             const LevelSequence& levels) {
  if (distances.empty()) throw ConfigError("no distance fields given");
  if (distances.size() != levels.size()) {
    throw ConfigError("distance field count must equal the number of levels");
  }
  const Grid2D& g = distances[0].grid();
  const double half = levels.half();
  MultilayerLevelSet m{ScalarField(g), levels};
  for (std::size_t k = 0; k < g.size(); ++k) {
    std::size_t best = 0;
    double dbest = std::abs(distances[0][k]);
    for (std::size_t n = 1; n < distances.size(); ++n) {
      const double d = std::abs(distances[n][k]);
      if (d < dbest) {
        dbest = d;
        best = n;
      }
    }
    const double d = distances[best][k];
    if (!std::isfinite(d)) throw DataError("distance field is not finite");
    m.phi[k] = levels[best] + std::clamp(d, -half, half);
  }
  return m;
}

inline double SmoothHeaviside(double x, double tau) {
  return 0.5 * (std::tanh(x / tau) + 1.0);
}

inline double SmoothDelta(double x, double tau) {
  const double c = std::cosh(x / tau);
  return 1.0 / (2.0 * tau * c * c);
}

inline double SharpHeaviside(double x) { return x >= 0.0 ? 1.0 : 0.0; }

struct SlownessModel {
  MultilayerLevelSet mlsf;
  std::vector<ScalarField> p;  // p_0 .. p_N
  double tau = 1e-2;
  std::vector<bool> frozen;  // per p_n; empty means none frozen

  std::size_t N() const { return mlsf.num_levels(); }
  bool is_frozen(std::size_t n) const { return n < frozen.size() && frozen[n]; }

  void validate() const {
    if (!(tau > 0.0)) throw ConfigError("Heaviside width tau must be positive");
    if (p.size() != N() + 1) {
      std::ostringstream os;
      os << "slowness model needs " << N() + 1 << " parameter fields, got " << p.size();
      throw ConfigError(os.str());
    }
    if (!frozen.empty() && frozen.size() != p.size()) {
      throw ConfigError("frozen flag count must equal parameter field count");
    }
    for (const auto& f : p) {
      if (!(f.grid() == mlsf.grid())) throw ConfigError("parameter field grid mismatch");
    }
  }
};

namespace detail {

template <typename Heaviside>
ScalarField Synthesize(const SlownessModel& m, Heaviside&& H) {
  m.validate();
  const std::size_t N = m.N();
  const LevelSequence& lv = m.mlsf.levels;
  const ScalarField& phi = m.mlsf.phi;
  ScalarField S(phi.grid());
  for (std::size_t k = 0; k < S.size(); ++k) {
    double s = 0.0;
    for (std::size_t n = 0; n < N; ++n) s += m.p[n][k] * (1.0 - H(phi[k] - lv[n]));
    s += m.p[N][k] * H(phi[k] - lv[N - 1]);
    S[k] = s;
  }
  return S;
}

}  // namespace detail

/// S = sum_n p_n (1 - H_tau(phi - i_n)) + p_N H_tau(phi - i_{N-1}).
/// Throws InvalidSlownessError if the result is not strictly positive.
inline ScalarField SynthesizeSlowness(const SlownessModel& m) {
  const double tau = m.tau;
  ScalarField S = detail::Synthesize(m, [tau](double x) { return SmoothHeaviside(x, tau); });
  for (std::size_t k = 0; k < S.size(); ++k) {
    if (!(S[k] > 0.0)) {
      std::ostringstream os;
      os << "synthesized slowness " << S[k] << " <= 0 at node " << k;
      throw InvalidSlownessError(os.str());
    }
  }
  return S;
}

/// Same composition with the sharp Heaviside (H(0) = 1); no positivity check.
inline ScalarField SynthesizeSlownessSharp(const SlownessModel& m) {
  return detail::Synthesize(m, [](double x) { return SharpHeaviside(x); });
}

/// p_n = S_n - S_{n+1} (n <= N-2), p_{N-1} = S_{N-1}, p_N = S_N.
inline std::vector<ScalarField> PFromS(const std::vector<ScalarField>& S) {
  if (S.size() < 2) throw ConfigError("need at least two region values (N >= 1)");
  const std::size_t N = S.size() - 1;
  std::vector<ScalarField> p(S.begin(), S.end());
  for (std::size_t n = 0; n + 1 < N; ++n) p[n] = S[n] - S[n + 1];
  return p;
}

/// S_n = sum_{k=n}^{N-1} p_k, S_N = p_N.
inline std::vector<ScalarField> SFromP(const std::vector<ScalarField>& p) {
  if (p.size() < 2) throw ConfigError("need at least two parameter fields (N >= 1)");
  const std::size_t N = p.size() - 1;
  std::vector<ScalarField> S(p.begin(), p.end());
  for (std::size_t n = N - 1; n-- > 0;) S[n] = p[n] + S[n + 1];
  return S;
}

/// Sharp indicators of D_0 = {phi < i_0}, D_n = {i_{n-1} <= phi < i_n},
/// D_N = {phi >= i_{N-1}}.
inline std::vector<ScalarField> RegionMasks(const MultilayerLevelSet& m) {
  const std::size_t N = m.num_levels();
  std::vector<ScalarField> masks(N + 1, ScalarField(m.grid()));
  for (std::size_t k = 0; k < m.phi.size(); ++k) {
    const double v = m.phi[k];
    std::size_t region = N;
    for (std::size_t n = 0; n < N; ++n) {
      if (v < m.levels[n]) {
        region = n;
        break;
      }
    }
    masks[region][k] = 1.0;
  }
  return masks;
}

/// Region index per node (same convention as RegionMasks).
inline std::vector<std::size_t> RegionIndex(const MultilayerLevelSet& m) {
  const std::size_t N = m.num_levels();
  std::vector<std::size_t> out(m.phi.size(), N);
  for (std::size_t k = 0; k < m.phi.size(); ++k) {
    for (std::size_t n = 0; n < N; ++n) {
      if (m.phi[k] < m.levels[n]) {
        out[k] = n;
        break;
      }
    }
  }
  return out;
}

namespace detail {

inline double MinMod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

/// Second-order ENO one-sided differences along one axis at node k (index i
/// of n along the axis, neighbor offset `stride`); mirrored at the ends.
inline void Eno2(const double* P, std::size_t k, std::size_t i, std::size_t n,
                 std::size_t stride, double inv_h, double& dm, double& dp) {
  if (i >= 2 && i + 2 < n) {
    const double f0 = P[k], fm1 = P[k - stride], fp1 = P[k + stride];
    const double dd0 = fp1 - 2.0 * f0 + fm1;
    const double ddm = f0 - 2.0 * fm1 + P[k - 2 * stride];
    const double ddp = P[k + 2 * stride] - 2.0 * fp1 + f0;
    dm = (f0 - fm1 + 0.5 * MinMod(dd0, ddm)) * inv_h;
    dp = (fp1 - f0 - 0.5 * MinMod(dd0, ddp)) * inv_h;
    return;
  }
  auto at = [&](std::ptrdiff_t off) {
    std::ptrdiff_t q = static_cast<std::ptrdiff_t>(i) + off;
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(n) - 1;
    if (q < 0) q = -q;
    if (q > last) q = 2 * last - q;
    q = std::clamp<std::ptrdiff_t>(q, 0, last);
    return P[k + (q - static_cast<std::ptrdiff_t>(i)) * static_cast<std::ptrdiff_t>(stride)];
  };
  const double fm2 = at(-2), fm1 = at(-1), f0 = P[k], fp1 = at(1), fp2 = at(2);
  const double dd0 = fp1 - 2.0 * f0 + fm1;
  const double ddm = f0 - 2.0 * fm1 + fm2;
  const double ddp = fp2 - 2.0 * fp1 + f0;
  dm = (f0 - fm1 + 0.5 * MinMod(dd0, ddm)) * inv_h;
  dp = (fp1 - f0 - 0.5 * MinMod(dd0, ddp)) * inv_h;
}

}  // namespace detail

enum class ReinitScheme {
  kFirstOrder,   // first-order one-sided differences everywhere
  kSubcellEno2,  // subcell fix next to the interface, ENO2 elsewhere
};

struct ReinitOptions {
  int steps = 5;
  double dxi = 0.0;  // 0 selects h/2
  ReinitScheme scheme = ReinitScheme::kFirstOrder;
};

/// One level's pseudo-time evolution psi_xi + s(psi0)(|grad psi| - 1) = 0,
/// forward Euler, Godunov upwinding by the sign, smoothed sign with width h.
/// With kSubcellEno2, nodes next to a sign change of psi0 are relaxed toward
/// their subcell distance psi0 / |grad psi0| so the zero crossing stays in
/// place, and the other nodes use second-order ENO differences.
inline ScalarField ReinitializeLevel(const ScalarField& psi0, int steps, double dxi,
                                     double band = std::numeric_limits<double>::infinity(),
                                     ReinitScheme scheme = ReinitScheme::kFirstOrder) {
  const bool subcell = scheme == ReinitScheme::kSubcellEno2;
  const Grid2D& g = psi0.grid();
  const std::size_t nx = g.nx, ny = g.ny;
  const double h = g.h, inv_h = 1.0 / h;
  std::vector<double> sgn(psi0.size());
  for (std::size_t k = 0; k < psi0.size(); ++k) {
    sgn[k] = psi0[k] / std::sqrt(psi0[k] * psi0[k] + h * h);
  }
  // Subcell distance at nodes adjacent to the interface; NaN elsewhere. Where
  // the one-sided slopes on an axis disagree (a kink), the slope across the
  // sign change, or the smaller one, replaces the central difference.
  // Neighbors with |psi0| >= band (clamped, or in another level's band) and
  // neighbors outside the grid carry no distance information.
  std::vector<double> anchor(psi0.size(), std::numeric_limits<double>::quiet_NaN());
  if (subcell) {
    const double* P = psi0.values().data();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto slope = [band](double m, double c, double p) {
      const bool vm = std::abs(m) < band, vp = std::abs(p) < band;
      if (vm && vp) {
        const double dm = c - m, dp = p - c;
        if (std::abs(dp - dm) <= 0.5 * std::max(std::abs(dp), std::abs(dm))) {
          return 0.5 * (p - m);
        }
        const bool cm = c * m < 0.0, cp = c * p < 0.0;
        if (cm != cp) return cm ? dm : dp;
        return std::abs(dm) < std::abs(dp) ? dm : dp;
      }
      if (vp) return p - c;
      if (vm) return c - m;
      return 0.0;
    };
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t k = j * nx + i;
        const double c = P[k];
        const double xm = i > 0 ? P[k - 1] : nan, xp = i + 1 < nx ? P[k + 1] : nan;
        const double zm = j > 0 ? P[k - nx] : nan, zp = j + 1 < ny ? P[k + nx] : nan;
        const bool cut = c == 0.0 || c * xm < 0.0 || c * xp < 0.0 || c * zm < 0.0 ||
                         c * zp < 0.0;
        if (!cut) continue;
        const double dx = slope(xm, c, xp), dz = slope(zm, c, zp);
        double gn = std::sqrt(dx * dx + dz * dz);
        if (gn < 0.5 * std::abs(c)) gn = h;
        anchor[k] = gn > 0.0 ? h * c / gn : c;
      }
    }
  }
  ScalarField psi = psi0;
  ScalarField next = psi0;
  for (int step = 0; step < steps; ++step) {
    const double* P = psi.values().data();
    double* Q = next.values().data();
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t k = j * nx + i;
        const double c = P[k];
        if (!std::isnan(anchor[k])) {
          const double s0 = psi0[k] > 0.0 ? 1.0 : (psi0[k] < 0.0 ? -1.0 : 0.0);
          Q[k] = c - dxi * inv_h * (s0 * std::abs(c) - anchor[k]);
          continue;
        }
        double dxm, dxp, dzm, dzp;
        if (subcell) {
          detail::Eno2(P, k, i, nx, 1, inv_h, dxm, dxp);
          detail::Eno2(P, k, j, ny, nx, inv_h, dzm, dzp);
        } else {
          dxm = i > 0 ? (c - P[k - 1]) * inv_h : 0.0;
          dxp = i + 1 < nx ? (P[k + 1] - c) * inv_h : 0.0;
          if (i == 0) dxm = dxp;
          if (i + 1 == nx) dxp = dxm;
          dzm = j > 0 ? (c - P[k - nx]) * inv_h : 0.0;
          dzp = j + 1 < ny ? (P[k + nx] - c) * inv_h : 0.0;
          if (j == 0) dzm = dzp;
          if (j + 1 == ny) dzp = dzm;
        }
        const double s = sgn[k];
        double gx, gz;
        if (s > 0.0) {
          const double a = std::max(dxm, 0.0), b = std::min(dxp, 0.0);
          const double e = std::max(dzm, 0.0), f = std::min(dzp, 0.0);
          gx = std::max(a * a, b * b);
          gz = std::max(e * e, f * f);
        } else {
          const double a = std::min(dxm, 0.0), b = std::max(dxp, 0.0);
          const double e = std::min(dzm, 0.0), f = std::max(dzp, 0.0);
          gx = std::max(a * a, b * b);
          gz = std::max(e * e, f * f);
        }
        Q[k] = c - dxi * s * (std::sqrt(gx + gz) - 1.0);
      }
    }
    std::swap(psi, next);
  }
  return psi;
}

/// Multi-level reinitialization: evolve psi_n from phi - i_n for each level,
/// then rebuild phi = i_m + clamp(psi_m) with m = argmin_n |psi_n|.
inline MultilayerLevelSet Reinitialize(const MultilayerLevelSet& m,
                                       const ReinitOptions& opt = {}) {
  const Grid2D& g = m.grid();
  const double dxi = opt.dxi > 0.0 ? opt.dxi : 0.5 * g.h;
  if (opt.steps < 1) throw ConfigError("reinitialization needs at least one step");
  if (dxi > 0.5 * g.h * (1.0 + 1e-12)) {
    throw ConfigError("reinitialization pseudo-time step must not exceed h/2");
  }
  const std::size_t N = m.num_levels();
  std::vector<ScalarField> psi;
  psi.reserve(N);
  for (std::size_t n = 0; n < N; ++n) {
    ScalarField psi0 = m.phi;
    for (double& v : psi0.values()) v -= m.levels[n];
    psi.push_back(ReinitializeLevel(psi0, opt.steps, dxi, m.levels.half(), opt.scheme));
  }
  const double half = m.levels.half();
  MultilayerLevelSet out{ScalarField(g), m.levels};
  for (std::size_t k = 0; k < g.size(); ++k) {
    std::size_t best = 0;
    double dbest = std::abs(psi[0][k]);
    for (std::size_t n = 1; n < N; ++n) {
      const double d = std::abs(psi[n][k]);
      if (d < dbest) {
        dbest = d;
        best = n;
      }
    }
    out.phi[k] = m.levels[best] + std::clamp(psi[best][k], -half, half);
  }
  return out;
}

}  // namespace mlsm
