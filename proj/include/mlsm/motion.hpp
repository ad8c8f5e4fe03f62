#pragma once

// Interface motion for a multilayer level-set function. Each level carries its
// own law (constant normal speed, mean curvature, or fixed); a node moves with
// the law of its nearest level.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mlsm/errors.hpp"
#include "mlsm/grid_fields.hpp"
#include "mlsm/mlsf.hpp"

namespace mlsm {

struct MotionLaw {
  enum class Kind { kNormal, kCurvature, kFixed };
  Kind kind = Kind::kFixed;
  double value = 0.0;  // v_n for kNormal, c for kCurvature (v_n = -c kappa)

  static MotionLaw Normal(double v) { return {Kind::kNormal, v}; }
  static MotionLaw Curvature(double c) { return {Kind::kCurvature, c}; }
  static MotionLaw Fixed() { return {Kind::kFixed, 0.0}; }
};

struct MotionSpec {
  std::vector<MotionLaw> laws;  // one per level
  double t_final = 1.0;
  double dt = 0.0;  // 0 selects the stability bound
  int reinit_every = 5;
  int reinit_steps = 5;
};

struct MotionResult {
  MultilayerLevelSet mlsf;
  double t = 0.0;
  int steps = 0;
  double dt_bound = 0.0;  // stability bound in force
  double dt_max_used = 0.0;
  std::vector<std::string> log;
};

/// Largest stable step: h/(2 max|v|) for normal laws, h^2/(8 max c) for
/// curvature laws.
inline double StableTimeStep(const MotionSpec& spec, double h) {
  double vmax = 0.0, cmax = 0.0;
  for (const auto& law : spec.laws) {
    if (law.kind == MotionLaw::Kind::kNormal) vmax = std::max(vmax, std::abs(law.value));
    if (law.kind == MotionLaw::Kind::kCurvature) cmax = std::max(cmax, std::abs(law.value));
  }
  double dt = std::numeric_limits<double>::infinity();
  if (vmax > 0.0) dt = std::min(dt, h / (2.0 * vmax));
  if (cmax > 0.0) dt = std::min(dt, h * h / (8.0 * cmax));
  if (!std::isfinite(dt)) dt = 0.5 * h;
  return dt;
}

namespace detail {

/// Rate phi_t at every node for the nearest-level laws. Each node sees its own
/// level's local function: neighbors whose nearest level differs (the other
/// side of a contact) are replaced by linear extrapolation from the node's
/// side.
inline void MotionRate(const MultilayerLevelSet& m, const std::vector<MotionLaw>& laws,
                       std::vector<double>& rate) {
  const Grid2D& g = m.grid();
  const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(g.nx);
  const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(g.ny);
  const double inv_h = 1.0 / g.h;
  const double* P = m.phi.values().data();
  const auto& lv = m.levels;
  rate.assign(g.size(), 0.0);
  std::vector<std::size_t> level(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) level[k] = lv.nearest(P[k]);
  for (std::ptrdiff_t j = 0; j < ny; ++j) {
    for (std::ptrdiff_t i = 0; i < nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j * nx + i);
      const double c = P[k];
      const std::size_t n = level[k];
      const MotionLaw& law = laws[n];
      if (law.kind == MotionLaw::Kind::kFixed || law.value == 0.0) continue;
      if (i > 0 && j > 0 && i + 1 < nx && j + 1 < ny) {
        const double* up = P + k - nx;
        const double* dn = P + k + nx;
        if (up[-1] == c && up[0] == c && up[1] == c && P[k - 1] == c && P[k + 1] == c &&
            dn[-1] == c && dn[0] == c && dn[1] == c) {
          continue;
        }
      }
      const bool normal = law.kind == MotionLaw::Kind::kNormal;
      // 3x3 stencil f[b+1][a+1] at offsets (a, b); NaN marks a value from
      // outside the grid or from another level. raw keeps in-grid values.
      const double nan = std::numeric_limits<double>::quiet_NaN();
      double f[3][3], raw[3][3];
      for (int b = -1; b <= 1; ++b) {
        for (int a = -1; a <= 1; ++a) {
          const std::ptrdiff_t ii = i + a, jj = j + b;
          double w = nan, v = nan;
          if (ii >= 0 && ii < nx && jj >= 0 && jj < ny) {
            w = P[jj * nx + ii];
            if (level[static_cast<std::size_t>(jj * nx + ii)] == n) v = w;
          }
          raw[b + 1][a + 1] = w;
          f[b + 1][a + 1] = v;
        }
      }
      f[1][1] = c;
      // Missing axis neighbors: extrapolate from the opposite side. A node
      // with no same-level neighbor on an axis lies in a sub-cell filament
      // and keeps the raw values. Outside the grid, curvature laws mirror
      // (zero normal derivative) and normal laws extrapolate linearly.
      auto fill = [&](double& lo, double& hi, double raw_lo, double raw_hi) {
        if (std::isnan(lo) && std::isnan(hi)) {
          lo = raw_lo;
          hi = raw_hi;
        }
        if (!normal) {
          if (std::isnan(raw_lo) && !std::isnan(hi)) lo = hi;
          if (std::isnan(raw_hi) && !std::isnan(lo)) hi = lo;
        }
        if (std::isnan(lo) && std::isnan(hi)) {
          lo = hi = c;
        } else if (std::isnan(lo)) {
          lo = 2.0 * c - hi;
        } else if (std::isnan(hi)) {
          hi = 2.0 * c - lo;
        }
      };
      fill(f[1][0], f[1][2], raw[1][0], raw[1][2]);
      fill(f[0][1], f[2][1], raw[0][1], raw[2][1]);
      if (normal) {
        const double dxm = (c - f[1][0]) * inv_h, dxp = (f[1][2] - c) * inv_h;
        const double dzm = (c - f[0][1]) * inv_h, dzp = (f[2][1] - c) * inv_h;
        double gx, gz;
        if (law.value > 0.0) {
          const double a = std::max(dxm, 0.0), b = std::min(dxp, 0.0);
          const double e = std::max(dzm, 0.0), q = std::min(dzp, 0.0);
          gx = std::max(a * a, b * b);
          gz = std::max(e * e, q * q);
        } else {
          const double a = std::min(dxm, 0.0), b = std::max(dxp, 0.0);
          const double e = std::min(dzm, 0.0), q = std::max(dzp, 0.0);
          gx = std::max(a * a, b * b);
          gz = std::max(e * e, q * q);
        }
        rate[k] = -law.value * std::sqrt(gx + gz);
        continue;
      }
      for (int b : {0, 2}) {
        for (int a : {0, 2}) {
          if (std::isnan(f[b][a])) f[b][a] = f[b][1] + f[1][a] - c;
        }
      }
      const double fxm = f[1][0], fxp = f[1][2], fzm = f[0][1], fzp = f[2][1];
      const double px = 0.5 * (fxp - fxm) * inv_h;
      const double pz = 0.5 * (fzp - fzm) * inv_h;
      const double g2 = px * px + pz * pz;
      const double pxx = (fxp - 2.0 * c + fxm) * inv_h * inv_h;
      const double pzz = (fzp - 2.0 * c + fzm) * inv_h * inv_h;
      if (g2 < 1e-16) {
        // Direction average at a critical point: kappa |grad phi| -> Lap phi / 2.
        rate[k] = law.value * 0.5 * (pxx + pzz);
        continue;
      }
      const double pxz = 0.25 * (f[2][2] - f[2][0] - f[0][2] + f[0][0]) * inv_h * inv_h;
      const double kgrad = (pxx * pz * pz - 2.0 * px * pz * pxz + pzz * px * px) / g2;
      rate[k] = law.value * kgrad;
    }
  }
}

}  // namespace detail

/// Curvature kappa = div(grad phi / |grad phi|) by central differences; zero
/// where |grad phi| < 1e-8.
inline ScalarField Curvature(const ScalarField& phi) {
  MultilayerLevelSet m{phi, LevelSequence({0.0}, 1.0)};
  std::vector<double> rate;
  detail::MotionRate(m, {MotionLaw::Curvature(1.0)}, rate);
  // rate = kappa |grad phi|; divide by the same central gradient.
  const Grid2D& g = phi.grid();
  ScalarField out(g, 0.0);
  for (std::size_t j = 0; j < g.ny; ++j) {
    const std::size_t jm = j > 0 ? j - 1 : 1, jp = j + 1 < g.ny ? j + 1 : g.ny - 2;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t im = i > 0 ? i - 1 : 1, ip = i + 1 < g.nx ? i + 1 : g.nx - 2;
      const double px = 0.5 * (phi(ip, j) - phi(im, j)) / g.h;
      const double pz = 0.5 * (phi(i, jp) - phi(i, jm)) / g.h;
      const double gn = std::sqrt(px * px + pz * pz);
      if (gn >= 1e-8) out(i, j) = rate[g.index(i, j)] / gn;
    }
  }
  return out;
}

using MotionObserver = std::function<void(double t, int step, const MultilayerLevelSet&)>;

/// Explicit Euler time stepping of phi_t + v_n |grad phi| = 0 with per-level
/// laws, reinitializing every `reinit_every` steps. A requested dt above the
/// stability bound is reduced and the reduction logged. The observer runs at
/// t = 0 and after every step.
inline MotionResult Advance(const MultilayerLevelSet& initial, const MotionSpec& spec,
                            const MotionObserver& observer = {}) {
  if (!(spec.t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (spec.laws.size() != initial.num_levels()) {
    throw ConfigError("need exactly one motion law per level");
  }
  if (spec.reinit_every < 0) throw ConfigError("reinit_every must be >= 0");
  const double h = initial.grid().h;
  MotionResult out;
  out.mlsf = initial;
  out.dt_bound = StableTimeStep(spec, h);
  double dt = out.dt_bound;
  if (spec.dt > 0.0) {
    if (spec.dt > out.dt_bound) {
      std::ostringstream os;
      os << "requested dt " << spec.dt << " exceeds stability bound " << out.dt_bound
         << "; stepped down";
      out.log.push_back(os.str());
    } else {
      dt = spec.dt;
    }
  }
  if (observer) observer(0.0, 0, out.mlsf);
  std::vector<double> rate;
  const double eps_t = 1e-12 * spec.t_final;
  while (out.t < spec.t_final - eps_t) {
    const double step = std::min(dt, spec.t_final - out.t);
    detail::MotionRate(out.mlsf, spec.laws, rate);
    auto& phi = out.mlsf.phi.values();
    for (std::size_t k = 0; k < phi.size(); ++k) phi[k] += step * rate[k];
    out.t += step;
    ++out.steps;
    out.dt_max_used = std::max(out.dt_max_used, step);
    if (spec.reinit_every > 0 && out.steps % spec.reinit_every == 0) {
      out.mlsf = Reinitialize(out.mlsf, ReinitOptions{spec.reinit_steps, 0.0, ReinitScheme::kSubcellEno2});
    }
    if (observer) observer(out.t, out.steps, out.mlsf);
  }
  return out;
}

using Point2 = std::pair<double, double>;

/// Zero crossings of phi - i_n along grid edges, linearly interpolated.
inline std::vector<Point2> LevelCrossings(const MultilayerLevelSet& m, std::size_t n) {
  const Grid2D& g = m.grid();
  const double level = m.levels[n];
  std::vector<Point2> pts;
  auto edge = [&](std::size_t a, std::size_t b) {
    const double va = m.phi[a] - level, vb = m.phi[b] - level;
    if ((va < 0.0) == (vb < 0.0)) return;
    const double t = va / (va - vb);
    const double xa = g.x(g.col(a)), za = g.z(g.row(a));
    const double xb = g.x(g.col(b)), zb = g.z(g.row(b));
    pts.emplace_back(xa + t * (xb - xa), za + t * (zb - za));
  };
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (i + 1 < g.nx) edge(k, k + 1);
      if (j + 1 < g.ny) edge(k, k + g.nx);
    }
  }
  return pts;
}

/// Mean distance of the level-n crossings to (cx, cz); empty when the level
/// set has vanished.
inline std::optional<double> MeanRadius(const MultilayerLevelSet& m, std::size_t n,
                                        double cx = 0.0, double cz = 0.0) {
  const auto pts = LevelCrossings(m, n);
  if (pts.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& [x, z] : pts) s += std::hypot(x - cx, z - cz);
  return s / static_cast<double>(pts.size());
}

/// Mean over level-n1 crossings of the distance to the nearest level-n2
/// crossing; empty when either level set is empty.
inline std::optional<double> AverageGap(const MultilayerLevelSet& m, std::size_t n1,
                                        std::size_t n2) {
  const auto a = LevelCrossings(m, n1);
  const auto b = n1 == n2 ? a : LevelCrossings(m, n2);
  if (a.empty() || b.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& [x, z] : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [u, v] : b) {
      const double d2 = (x - u) * (x - u) + (z - v) * (z - v);
      if (d2 < best) best = d2;
    }
    s += std::sqrt(best);
  }
  return s / static_cast<double>(a.size());
}

}  // namespace mlsm
