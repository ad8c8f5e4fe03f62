#pragma once

// Catalog of test configurations: the seven tomography examples on
// (-1,1)x(0,2) and the interface-motion tests. Geometries of the true models
// are representative shapes (layered horizons, embedded circle, square,
// triangle, ellipses); see README for the concrete parameters.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mlsm/adjoint.hpp"
#include "mlsm/eikonal.hpp"
#include "mlsm/errors.hpp"
#include "mlsm/grid_fields.hpp"
#include "mlsm/inversion.hpp"
#include "mlsm/mlsf.hpp"
#include "mlsm/motion.hpp"
#include "mlsm/parallel.hpp"

namespace mlsm {

namespace sdf {

using Fn = std::function<double(double, double)>;

inline Fn Circle(double cx, double cz, double r) {
  return [=](double x, double z) { return std::hypot(x - cx, z - cz) - r; };
}

/// Axis-aligned box with center (cx, cz) and half sizes (hx, hz).
inline Fn Box(double cx, double cz, double hx, double hz) {
  return [=](double x, double z) {
    const double qx = std::abs(x - cx) - hx, qz = std::abs(z - cz) - hz;
    const double outside = std::hypot(std::max(qx, 0.0), std::max(qz, 0.0));
    return outside + std::min(std::max(qx, qz), 0.0);
  };
}

/// Convex polygon with counter-clockwise vertices.
inline Fn Polygon(std::vector<std::pair<double, double>> v) {
  return [v = std::move(v)](double x, double z) {
    double dmin = std::numeric_limits<double>::infinity();
    bool inside = true;
    for (std::size_t a = 0; a < v.size(); ++a) {
      const auto [ax, az] = v[a];
      const auto [bx, bz] = v[(a + 1) % v.size()];
      const double ex = bx - ax, ez = bz - az;
      const double wx = x - ax, wz = z - az;
      const double t = std::clamp((wx * ex + wz * ez) / (ex * ex + ez * ez), 0.0, 1.0);
      dmin = std::min(dmin, std::hypot(wx - t * ex, wz - t * ez));
      if (ex * wz - ez * wx < 0.0) inside = false;
    }
    return inside ? -dmin : dmin;
  };
}

/// First-order distance estimate (q - 1)/|grad q| for the ellipse q = 1.
inline Fn Ellipse(double cx, double cz, double a, double b) {
  return [=](double x, double z) {
    const double dx = x - cx, dz = z - cz;
    const double q = std::sqrt(dx * dx / (a * a) + dz * dz / (b * b));
    const double gn = std::hypot(dx / (a * a), dz / (b * b));
    if (gn < 1e-14) return -std::min(a, b);
    return (q - 1.0) * q / gn;
  };
}

/// Region {z > f(x)}, negative inside, with the first-order distance
/// (f(x) - z)/sqrt(1 + f'(x)^2).
inline Fn Below(std::function<double(double)> f, std::function<double(double)> df) {
  return [f = std::move(f), df = std::move(df)](double x, double z) {
    const double s = df(x);
    return (f(x) - z) / std::sqrt(1.0 + s * s);
  };
}

inline Fn Union(Fn a, Fn b) {
  return [a = std::move(a), b = std::move(b)](double x, double z) {
    return std::min(a(x, z), b(x, z));
  };
}

inline Fn Negate(Fn a) {
  return [a = std::move(a)](double x, double z) { return -a(x, z); };
}

}  // namespace sdf

struct Scenario {
  enum class Kind { kInversion, kMotion };

  std::string id;
  std::string description;
  Kind kind = Kind::kInversion;
  Grid2D grid;
  LevelSequence levels;

  // Tomography scenarios.
  SlownessModel truth;
  SlownessModel initial;
  std::vector<SourceSpec> sources;
  BoundarySet gamma;
  InversionConfig config;

  // Motion scenarios.
  MultilayerLevelSet motion_initial;
  MotionSpec motion;
};

inline const std::vector<std::string>& ScenarioIds() {
  static const std::vector<std::string> ids = {
      "ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7",
      "motion-fig2", "motion-obstacle", "curvature-circles", "curvature-circles-5k",
      "curvature-obstacles"};
  return ids;
}

inline std::size_t DefaultResolution(const std::string& id) {
  if (id == "motion-fig2" || id == "motion-obstacle") return 101;
  if (id == "curvature-circles" || id == "curvature-circles-5k") return 401;
  if (id == "curvature-obstacles") return 201;
  return 129;
}

namespace detail {

inline std::vector<ScalarField> SampleAll(const Grid2D& g, const std::vector<sdf::Fn>& fs) {
  std::vector<ScalarField> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back(ScalarField::Sample(g, f));
  return out;
}

inline SlownessModel ModelFromRegions(const MultilayerLevelSet& m,
                                      const std::vector<sdf::Fn>& region_slowness,
                                      double tau) {
  SlownessModel out;
  out.mlsf = m;
  out.p = PFromS(SampleAll(m.grid(), region_slowness));
  out.tau = tau;
  return out;
}

/// Source layout (+-0.9, 0.1:0.3:1.9) with measurements on the full boundary.
inline void StandardSurvey(Scenario& s) {
  s.sources.clear();
  for (double x : {-0.9, 0.9}) {
    for (int k = 0; k < 7; ++k) s.sources.push_back(SourceSpec::At(s.grid, x, 0.1 + 0.3 * k));
  }
  s.gamma = BoundarySet::Full(s.grid);
}

inline sdf::Fn Const(double v) {
  return [v](double, double) { return v; };
}

}  // namespace detail

/// Initial level-set function sqrt(x^2 + (z-1)^2) - 0.3 with levels 0, 0.5.
inline MultilayerLevelSet CircleInitialGuess(const Grid2D& g, const LevelSequence& levels) {
  ScalarField d = ScalarField::Sample(g, sdf::Circle(0.0, 1.0, 0.3));
  return MultilayerLevelSet{d, levels};
}

/// Two-branch initial guess built from d0 = |x - (-0.5, 1)| - 0.2 and
/// d1 = 0.2 - |x - (0.5, 1)|: level 0 where |d0| < |d1|, level 0.5 otherwise.
inline MultilayerLevelSet TwoCircleInitialGuess(const Grid2D& g) {
  ScalarField phi(g);
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double x = g.x(i), z = g.z(j);
      const double d0 = std::hypot(x + 0.5, z - 1.0) - 0.2;
      const double d1 = 0.2 - std::hypot(x - 0.5, z - 1.0);
      phi(i, j) = std::abs(d0) < std::abs(d1) ? std::clamp(d0, -0.25, 0.25)
                                               : 0.5 + std::clamp(d1, -0.25, 0.25);
    }
  }
  return MultilayerLevelSet{phi, LevelSequence::Arithmetic(0.0, 0.5, 2)};
}

/// Builds a catalog scenario; n = 0 selects the default resolution (n x n
/// nodes).
inline Scenario MakeScenario(const std::string& id, std::size_t n = 0) {
  const auto& ids = ScenarioIds();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    throw ConfigError("unknown scenario '" + id + "'");
  }
  if (n == 0) n = DefaultResolution(id);
  Scenario s;
  s.id = id;
  const double pi = std::acos(-1.0);

  if (id.rfind("ex", 0) == 0) {
    s.kind = Scenario::Kind::kInversion;
    s.grid = MakeGrid(-1.0, 1.0, 0.0, 2.0, n, n);
    s.levels = LevelSequence::Arithmetic(0.0, 0.5, 2);
    detail::StandardSurvey(s);
    const double tau = 1e-2;
    s.config.epsilon = 2e-3;
    s.config.max_iters = 5000;
    s.config.gamma_phi = 0.0;
    s.config.tau_hat = 3.0 * tau;

    std::vector<sdf::Fn> dist;
    std::vector<sdf::Fn> slow = {detail::Const(0.5), detail::Const(1.0), detail::Const(2.0)};
    // Layered horizons: deep region z > 1.35 + 0.1 sin(pi x) and intermediate
    // region z > 0.65 + 0.08 cos(pi x).
    auto layered = [&] {
      return std::vector<sdf::Fn>{
          sdf::Below([pi](double x) { return 1.35 + 0.1 * std::sin(pi * x); },
                     [pi](double x) { return 0.1 * pi * std::cos(pi * x); }),
          sdf::Below([pi](double x) { return 0.65 + 0.08 * std::cos(pi * x); },
                     [pi](double x) { return -0.08 * pi * std::sin(pi * x); })};
    };

    if (id == "ex1" || id == "ex5") {
      dist = layered();
      s.description = "layered horizons, S = 0.5 / 1.0 / 2.0";
    } else if (id == "ex2") {
      dist = {sdf::Below([pi](double x) { return 1.3 + 0.15 * std::sin(1.5 * pi * x); },
                         [pi](double x) { return 0.225 * pi * std::cos(1.5 * pi * x); }),
              sdf::Below([](double) { return 0.7; }, [](double) { return 0.0; })};
      s.description = "curved and straight interfaces, S = 0.5 / 1.0 / 2.0";
    } else if (id == "ex3") {
      dist = {sdf::Union(sdf::Circle(-0.4, 1.2, 0.25), sdf::Box(0.35, 0.8, 0.2, 0.2)),
              sdf::Box(0.0, 1.0, 0.8, 0.6)};
      s.description = "circle and square (S = 0.5) inside a rectangle (S = 1.0), S = 2.0 outside";
    } else if (id == "ex4") {
      dist = {sdf::Polygon({{-0.8, 0.6}, {-0.2, 0.6}, {-0.5, 1.4}}),
              sdf::Negate(sdf::Union(sdf::Circle(0.45, 1.4, 0.2), sdf::Box(0.45, 0.6, 0.2, 0.2)))};
      slow = {[](double, double z) { return z + 0.1; }, detail::Const(2.0), detail::Const(0.5)};
      s.description = "triangle (S = z + 0.1), circle and square (S = 0.5), background S = 2.0";
      s.config.epsilon = 1e-3;
    } else if (id == "ex6") {
      dist = {sdf::Ellipse(-0.3, 1.0, 0.35, 0.2), sdf::Ellipse(0.0, 1.0, 0.7, 0.5)};
      slow = {[](double x, double z) {
                return 0.5 * std::exp(2.0 * ((x + 0.3) * (x + 0.3) + (z - 1.0) * (z - 1.0)));
              },
              detail::Const(1.0), detail::Const(2.0)};
      s.description = "ellipse with S = 0.5 exp(2((x+0.3)^2+(z-1)^2)) inside an ellipse S = 1.0";
    } else {  // ex7
      dist = {sdf::Box(0.1, 1.0, 0.2, 0.15), sdf::Ellipse(0.1, 1.0, 0.6, 0.4)};
      slow = {detail::Const(3.0),
              [](double x, double z) {
                return 1.5 * std::exp(-((x - 0.1) * (x - 0.1) + (z - 1.0) * (z - 1.0)));
              },
              detail::Const(2.0)};
      s.description = "rectangle (S = 3.0) inside an ellipse S = 1.5 exp(-((x-0.1)^2+(z-1)^2))";
      s.config.gamma_phi = 0.01;
    }

    const auto truth_phi = BuildFromDistances(detail::SampleAll(s.grid, dist), s.levels);
    s.truth = detail::ModelFromRegions(truth_phi, slow, tau);

    const bool joint = id == "ex5" || id == "ex6" || id == "ex7";
    const MultilayerLevelSet init_phi =
        id == "ex4" ? TwoCircleInitialGuess(s.grid) : CircleInitialGuess(s.grid, s.levels);
    if (joint) {
      s.initial = detail::ModelFromRegions(
          init_phi, {detail::Const(1.2), detail::Const(1.2), detail::Const(2.0)}, tau);
      s.initial.frozen = {false, false, true};
    } else {
      s.initial = s.truth;
      s.initial.mlsf = init_phi;
      s.initial.frozen = {true, true, true};
    }
    return s;
  }

  s.kind = Scenario::Kind::kMotion;
  s.levels = LevelSequence::Arithmetic(0.0, 1.0, 2);
  std::vector<sdf::Fn> dist;
  if (id == "motion-fig2") {
    s.grid = MakeGrid(-2.5, 2.5, -2.5, 2.5, n, n);
    dist = {sdf::Circle(0, 0, 1.0), sdf::Circle(0, 0, 2.0)};
    s.motion.laws = {MotionLaw::Normal(1.0), MotionLaw::Normal(-1.0)};
    s.motion.t_final = 1.0;
    s.description = "concentric circles r = 1 (v = +1) and r = 2 (v = -1)";
  } else if (id == "motion-obstacle") {
    s.grid = MakeGrid(-5.0, 5.0, -5.0, 5.0, n, n);
    dist = {sdf::Circle(-1.25, -1.25, 0.5), sdf::Circle(0, 0, 0.5)};
    s.motion.laws = {MotionLaw::Fixed(), MotionLaw::Normal(1.0)};
    s.motion.t_final = 4.0;
    s.description = "circle r = 0.5 expanding (v = 1) past a fixed circle at (-1.25, -1.25)";
  } else if (id == "curvature-circles" || id == "curvature-circles-5k") {
    s.grid = MakeGrid(-5.0, 5.0, -5.0, 5.0, n, n);
    dist = {sdf::Circle(0, 0, 2.0), sdf::Circle(0, 0, 4.0)};
    const double outer = id == "curvature-circles" ? 1.0 : 5.0;
    s.motion.laws = {MotionLaw::Curvature(1.0), MotionLaw::Curvature(outer)};
    s.motion.t_final = 2.5;
    s.description = id == "curvature-circles"
                        ? "concentric circles r = 2 and r = 4, v = -kappa"
                        : "concentric circles r = 2 (v = -kappa) and r = 4 (v = -5 kappa)";
  } else {  // curvature-obstacles
    s.grid = MakeGrid(-5.0, 5.0, -5.0, 5.0, n, n);
    dist = {sdf::Union(sdf::Circle(-1.5, 0, 0.5), sdf::Circle(1.5, 0, 0.5)),
            sdf::Union(sdf::Circle(-1.5, 0, 2.0), sdf::Circle(1.5, 0, 2.0))};
    s.motion.laws = {MotionLaw::Fixed(), MotionLaw::Curvature(1.0)};
    s.motion.t_final = 3.0;
    s.description = "two merged circles (v = -kappa) around two fixed circles";
  }
  s.motion_initial = BuildFromDistances(detail::SampleAll(s.grid, dist), s.levels);
  return s;
}

/// Observed data from a slowness model: eikonal solve per source, traced on
/// gamma, plus optional uniform noise in [-noise, noise] (clipped at zero).
inline Survey SynthData(const ScalarField& S_true, const std::vector<SourceSpec>& sources,
                        const BoundarySet& gamma, double noise = 0.0, std::uint64_t seed = 0,
                        unsigned threads = 1, const EikonalOptions& eik = {}) {
  if (!(noise >= 0.0)) throw ConfigError("noise amplitude must be >= 0");
  Survey s;
  s.sources = sources;
  s.gamma = gamma;
  const auto sols = SolveEikonalAll(S_true, sources, eik, threads);
  s.observed.reserve(sols.size());
  for (const auto& sol : sols) {
    if (!sol.converged) throw SolverError("eikonal solve for synthetic data did not converge");
    s.observed.push_back(Trace(sol.T, gamma));
  }
  if (noise > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-noise, noise);
    for (auto& obs : s.observed) {
      for (double& v : obs) v = std::max(0.0, v + u(rng));
    }
  }
  return s;
}

/// Noiseless twin data from the scenario's true model.
inline Survey TwinSurvey(const Scenario& s, unsigned threads = 1) {
  if (s.kind != Scenario::Kind::kInversion) {
    throw ConfigError("scenario '" + s.id + "' has no tomography survey");
  }
  return SynthData(SynthesizeSlowness(s.truth), s.sources, s.gamma, 0.0, 0, threads,
                   s.config.eikonal);
}

}  // namespace mlsm
