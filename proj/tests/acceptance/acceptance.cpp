#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mlsm/mlsm.hpp"

using namespace mlsm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScalarField Bump(const Grid2D& g, double cx, double cz, double r) {
  return ScalarField::Sample(g, [=](double x, double z) {
    const double q = ((x - cx) * (x - cx) + (z - cz) * (z - cz)) / (r * r);
    return q < 1.0 ? std::pow(1.0 - q, 3) : 0.0;
  });
}

// 1. Cone convergence of the eikonal solver.
Outcome ConeConvergence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> err;
  for (std::size_t n : {65, 129, 257}) {
    const Grid2D g = MakeGrid(-1.0, 1.0, -1.0, 1.0, n, n);
    const auto sol = SolveEikonal(ScalarField(g, 1.0), SourceSpec::At(g, 0.0, 0.0));
    double e = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j) {
      for (std::size_t i = 0; i < g.nx; ++i) {
        const double d = std::hypot(g.x(i), g.z(j));
        if (d > 5.0 * g.h) e += std::abs(sol.T(i, j) - d) * g.h * g.h;
      }
    }
    err.push_back(e);
  }
  const double r1 = err[0] / err[1], r2 = err[1] / err[2], secs = Seconds(t0);
  return {r1 >= 1.4 && r2 >= 1.4 && secs < 10.0,
          Fmt("L1 errors %.3e %.3e %.3e, ratios %.3f %.3f (>= 1.4), %.1f s (< 10)", err[0],
              err[1], err[2], r1, r2, secs)};
}

// 2. Local Godunov update against the closed-form quadratic.
Outcome GodunovUpdateOracle() {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> T(0.0, 5.0), S(0.1, 5.0), H(1e-3, 0.5);
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const double a = T(rng), b = T(rng), s = S(rng), h = H(rng);
    const double sh = s * h;
    // Larger root of 2T^2 - 2(a+b)T + a^2 + b^2 - (sh)^2 = 0 when causal.
    const double A = 2.0, B = -2.0 * (a + b), C = a * a + b * b - sh * sh;
    const double disc = B * B - 4.0 * A * C;
    double want = std::min(a, b) + sh;
    if (disc >= 0.0) {
      const double t = (-B + std::sqrt(disc)) / (2.0 * A);
      if (t >= std::max(a, b)) want = t;
    }
    worst = std::max(worst, std::abs(GodunovUpdate(a, b, s, h) - want));
  }
  return {worst <= 1e-12, Fmt("max |error| %.2e over 1000 cases (<= 1e-12)", worst)};
}

// 3. Adjoint gradient against central differences on the Example-1 setup.
Outcome GradientCheck() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (std::size_t n : {65, 129}) {
    const double tol = n == 65 ? 0.05 : 0.02;
    const Scenario s = MakeScenario("ex1", n);
    const Survey survey = TwinSurvey(s);
    SlownessModel m = s.initial;
    m.tau = 1e-2;
    m.frozen.clear();
    const Grid2D& g = s.grid;
    const ScalarField S = SynthesizeSlowness(m);
    const ForwardResult fwd = ForwardModel(S, survey);
    const GradientResult gr = MisfitGradient(S, survey, fwd);
    auto misfit = [&](const SlownessModel& q) {
      return ForwardModel(SynthesizeSlowness(q), survey).misfit;
    };
    const double eps = 1e-4;

    const ScalarField bp = Bump(g, 0.2, 1.0, 0.4);
    SlownessModel pp = m, pm = m;
    pp.p[1] = Axpy(m.p[1], eps, bp);
    pm.p[1] = Axpy(m.p[1], -eps, bp);
    const double fd_p = (misfit(pp) - misfit(pm)) / (2 * eps);
    const double ad_p = NodeInnerProduct(FrechetP(gr.gradient, m)[1], bp);
    const double rel_p = std::abs(ad_p - fd_p) / std::abs(fd_p);

    const ScalarField bphi = Bump(g, 0.1, 1.25, 0.3);
    SlownessModel qp = m, qm = m;
    qp.mlsf.phi = Axpy(m.mlsf.phi, eps, bphi);
    qm.mlsf.phi = Axpy(m.mlsf.phi, -eps, bphi);
    const double fd_phi = (misfit(qp) - misfit(qm)) / (2 * eps);
    const double ad_phi = NodeInnerProduct(FrechetPhi(gr.gradient, m), bphi);
    const double rel_phi = std::abs(ad_phi - fd_phi) / std::abs(fd_phi);

    pass = pass && rel_p <= tol && rel_phi <= tol;
    detail += Fmt("%zu^2: p1 %.2e, phi %.2e (<= %.0f%%); ", n, rel_p, rel_phi, tol * 100);
  }
  const double secs = Seconds(t0);
  return {pass && secs < 120.0, detail + Fmt("%.1f s (< 120)", secs)};
}

// 4. Sobolev smoothing identities with reflected-ghost Laplacian and
// trapezoid weights.
Outcome SobolevIdentities() {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid2D g = MakeGrid(-1.0, 1.0, 0.0, 2.0, 65, 65);
  const double gamma = 1.0, h2 = g.h * g.h;
  auto w = [&](std::size_t i, std::size_t j) {
    return ((i == 0 || i + 1 == g.nx) ? 0.5 : 1.0) * ((j == 0 || j + 1 == g.ny) ? 0.5 : 1.0);
  };
  auto dot = [&](const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j) {
      for (std::size_t i = 0; i < g.nx; ++i) s += w(i, j) * a(i, j) * b(i, j);
    }
    return s * h2;
  };
  auto grad2 = [&](const ScalarField& f) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j) {
      for (std::size_t i = 0; i < g.nx; ++i) {
        if (i + 1 < g.nx) s += ((j == 0 || j + 1 == g.ny) ? 0.5 : 1.0) * std::pow(f(i + 1, j) - f(i, j), 2);
        if (j + 1 < g.ny) s += ((i == 0 || i + 1 == g.nx) ? 0.5 : 1.0) * std::pow(f(i, j + 1) - f(i, j), 2);
      }
    }
    return s;
  };
  double res_max = 0.0, mean_max = 0.0, id_max = 0.0;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    ScalarField p(g);
    for (double& v : p.values()) v = u(rng);
    const ScalarField P = SobolevSmooth(p, gamma);
    double res = 0.0, pn = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j) {
      for (std::size_t i = 0; i < g.nx; ++i) {
        const std::size_t im = i == 0 ? 1 : i - 1, ip = i + 1 == g.nx ? g.nx - 2 : i + 1;
        const std::size_t jm = j == 0 ? 1 : j - 1, jp = j + 1 == g.ny ? g.ny - 2 : j + 1;
        const double lap = (P(im, j) + P(ip, j) + P(i, jm) + P(i, jp) - 4 * P(i, j)) / h2;
        const double r = P(i, j) - gamma * lap - p(i, j);
        res += r * r;
        pn += p(i, j) * p(i, j);
      }
    }
    const ScalarField one(g, 1.0);
    res_max = std::max(res_max, std::sqrt(res / pn));
    mean_max = std::max(mean_max, std::abs(dot(P, one) - dot(p, one)) / std::abs(dot(p, one)));
    const double lhs = dot(p, P), rhs = dot(P, P) + gamma * grad2(P);
    id_max = std::max(id_max, std::abs(lhs - rhs) / std::abs(lhs));
  }
  const double secs = Seconds(t0);
  return {res_max <= 1e-10 && mean_max <= 1e-9 && id_max <= 1e-8 && secs < 5.0,
          Fmt("residual %.1e (<= 1e-10), mean %.1e (<= 1e-9), identity %.1e (<= 1e-8), %.2f s (< 5)",
              res_max, mean_max, id_max, secs)};
}

// 5. A clamped multilayer distance function is a reinitialization fixed point.
Outcome ReinitFixedPoint() {
  const Grid2D g = MakeGrid(-1.5, 1.5, -1.5, 1.5, 121, 121);
  const LevelSequence lv = LevelSequence::Arithmetic(0.0, 0.5, 2);
  const MultilayerLevelSet m = BuildFromDistances(
      {ScalarField::Sample(g, [](double x, double z) { return std::hypot(x, z) - 0.5; }),
       ScalarField::Sample(g, [](double x, double z) { return std::hypot(x, z) - 1.0; })},
      lv);
  const double h = g.h, half = lv.half();
  double worst = 0.0, shift = 0.0;
  for (const ReinitScheme scheme : {ReinitScheme::kFirstOrder, ReinitScheme::kSubcellEno2}) {
    const MultilayerLevelSet r = Reinitialize(m, ReinitOptions{5, 0.0, scheme});
    for (std::size_t k = 0; k < m.phi.size(); ++k) {
      if (lv.distance(m.phi[k]) < half - 3 * h) {
        worst = std::max(worst, std::abs(r.phi[k] - m.phi[k]));
      }
    }
    for (std::size_t n = 0; n < 2; ++n) {
      const auto a = LevelCrossings(m, n), b = LevelCrossings(r, n);
      for (const auto& [x, z] : b) {
        double best = 1e300;
        for (const auto& [x0, z0] : a) best = std::min(best, std::hypot(x - x0, z - z0));
        shift = std::max(shift, best);
      }
    }
  }
  return {worst <= 0.1 * h && shift <= h,
          Fmt("both schemes: max change %.3fh (<= 0.1h) away from kinks, crossing shift %.3fh "
              "(<= h)",
              worst / h, shift / h)};
}

// 6. Gap between colliding fronts under refinement.
Outcome FrontGapConvergence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> hs, gaps;
  for (std::size_t n : {101, 201, 401, 801}) {
    const Scenario s = MakeScenario("motion-fig2", n);
    const MotionResult r = Advance(s.motion_initial, s.motion);
    const auto gap = AverageGap(r.mlsf, 0, 1);
    if (!gap) return {false, Fmt("level set vanished at n=%zu", n)};
    hs.push_back(s.grid.h);
    gaps.push_back(*gap);
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < gaps.size(); ++k) decreasing = decreasing && gaps[k] < gaps[k - 1];
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(hs.size());
  for (std::size_t k = 0; k < hs.size(); ++k) {
    const double x = std::log(hs[k]), y = std::log(gaps[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double coef = std::exp((sy - slope * sx) / m);
  const double secs = Seconds(t0);
  return {decreasing && slope >= 0.6 && slope <= 1.0 && secs < 300.0,
          Fmt("gaps %.4f %.4f %.4f %.4f, fit %.2f h^%.3f (exponent in [0.6, 1.0]), %.0f s (< 300)",
              gaps[0], gaps[1], gaps[2], gaps[3], coef, slope, secs)};
}

// 7. Curvature flow: shrinking circle and the blocked two-circle test.
Outcome CurvatureFlow() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  {
    Scenario s = MakeScenario("curvature-circles", 401);
    s.motion.t_final = 1.5;
    Advance(s.motion_initial, s.motion, [&](double t, int, const MultilayerLevelSet& m) {
      const auto r = MeanRadius(m, 0);
      const double exact = std::sqrt(4.0 - 2.0 * t);
      worst = std::max(worst, r ? std::abs(*r - exact) / exact : 1.0);
    });
  }
  double gone[2] = {-1.0, -1.0};
  {
    Scenario s = MakeScenario("curvature-circles-5k", 201);
    s.motion.t_final = 2.2;
    Advance(s.motion_initial, s.motion, [&](double t, int, const MultilayerLevelSet& m) {
      for (std::size_t n = 0; n < 2; ++n) {
        if (gone[n] < 0.0 && !MeanRadius(m, n)) gone[n] = t;
      }
    });
  }
  auto in = [](double t) { return t >= 1.9 && t <= 2.1; };
  const double secs = Seconds(t0);
  return {worst <= 0.03 && in(gone[0]) && in(gone[1]) && secs < 600.0,
          Fmt("401^2 radius error %.2f%% (<= 3%%); 201^2 vanish times %.3f %.3f (in [1.9, 2.1]); "
              "%.0f s (< 600)",
              worst * 100, gone[0], gone[1], secs)};
}

struct TwinRun {
  Scenario scenario;
  InversionState state;
};

TwinRun RunTwin(const std::string& id, double eps, int iters) {
  TwinRun out{MakeScenario(id, 65), {}};
  InversionConfig cfg = out.scenario.config;
  cfg.epsilon = eps;
  cfg.max_iters = iters;
  out.state = Invert(TwinSurvey(out.scenario), out.scenario.initial, cfg);
  return out;
}

// 8. Interface-only twin inversion (Example 1).
Outcome InterfaceInversion() {
  const auto t0 = std::chrono::steady_clock::now();
  const TwinRun run = RunTwin("ex1", 2e-3, 5000);
  const auto& hist = run.state.history;
  const double ratio = hist.back().E / hist.front().E;
  const ScalarField S = SynthesizeSlownessSharp(run.state.model);
  const ScalarField St = SynthesizeSlownessSharp(run.scenario.truth);
  const MultilayerLevelSet& truth = run.scenario.truth.mlsf;
  const double h = run.scenario.grid.h;
  std::size_t far = 0, good = 0;
  for (std::size_t k = 0; k < S.size(); ++k) {
    if (truth.levels.distance(truth.phi[k]) <= 2 * h) continue;
    ++far;
    if (std::abs(S[k] - St[k]) <= 0.1) ++good;
  }
  const double frac = static_cast<double>(good) / static_cast<double>(far);
  const double secs = Seconds(t0);
  return {ratio <= 0.05 && frac >= 0.97 && secs < 900.0,
          Fmt("E/E0 %.2e after %d iterations (<= 5%%), %.2f%% of far nodes within 0.1 (>= 97%%), "
              "%.0f s (< 900)",
              ratio, run.state.iteration, frac * 100, secs)};
}

// 9. Joint interface and parameter twin inversion (Example 5).
Outcome JointInversion() {
  const auto t0 = std::chrono::steady_clock::now();
  const TwinRun run = RunTwin("ex5", 2e-2, 10000);
  std::vector<ScalarField> labels;
  for (const auto& sol : run.state.solutions) {
    labels.push_back(SolveLabeling(sol.T, run.scenario.gamma));
  }
  const ScalarField F = TotalIllumination(std::move(labels)).F;
  const MultilayerLevelSet& truth = run.scenario.truth.mlsf;
  const auto regions = RegionMasks(truth);
  const double h = run.scenario.grid.h;
  const auto& p = run.state.model.p;
  // Interior of the region each parameter defines: p0 in D0, p1 in D1.
  double s0 = 0.0, s1 = 0.0, a0 = 0.0, a1 = 0.0;
  std::size_t c0 = 0, c1 = 0, call = 0;
  for (std::size_t k = 0; k < F.size(); ++k) {
    if (F[k] < 0.9) continue;
    a0 += p[0][k];
    a1 += p[1][k];
    ++call;
    if (truth.levels.distance(truth.phi[k]) <= 2 * h) continue;
    if (regions[0][k] > 0.5) {
      s0 += p[0][k];
      ++c0;
    } else if (regions[1][k] > 0.5) {
      s1 += p[1][k];
      ++c1;
    }
  }
  const double p0 = s0 / static_cast<double>(c0), p1 = s1 / static_cast<double>(c1);
  const double e0 = std::abs(p0 + 0.5) / 0.5, e1 = std::abs(p1 - 1.0);
  const double secs = Seconds(t0);
  return {e0 <= 0.05 && e1 <= 0.05 && secs < 1200.0,
          Fmt("p0 %.4f on D0 interior (target -0.5, err %.1f%%), p1 %.4f on D1 interior (target "
              "1.0, err %.1f%%), nodes with F >= 0.9: %zu/%zu; all-node means %.4f %.4f; E/E0 %.2e; "
              "%.0f s (< 1200)",
              p0, e0 * 100, p1, e1 * 100, call, F.size(), a0 / static_cast<double>(call),
              a1 / static_cast<double>(call),
              run.state.history.back().E / run.state.history.front().E, secs)};
}

// 10. Illumination labels.
Outcome Illumination() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = MakeScenario("ex1", 65);
  const Grid2D& g = s.grid;
  auto total = [&](const ScalarField& S, const BoundarySet& gamma) {
    std::vector<ScalarField> labels;
    for (const auto& src : s.sources) labels.push_back(SolveLabeling(SolveEikonal(S, src).T, gamma));
    return TotalIllumination(std::move(labels)).F;
  };
  const ScalarField F = total(ScalarField(g, 1.0), BoundarySet::Full(g));
  double fmin = 1.0;
  for (std::size_t j = 1; j + 1 < g.ny; ++j) {
    for (std::size_t i = 1; i + 1 < g.nx; ++i) {
      double dc = 1e300;
      for (double cx : {g.xmin, g.xmax}) {
        for (double cz : {g.zmin, g.zmax}) dc = std::min(dc, std::hypot(g.x(i) - cx, g.z(j) - cz));
      }
      if (dc > 3 * g.h) fmin = std::min(fmin, F(i, j));
    }
  }
  const double empty = total(ScalarField(g, 1.0), BoundarySet(g, {})).max_abs();
  const ScalarField St = SynthesizeSlowness(s.truth);
  const double eF = IlluminationError(St, St, total(St, s.gamma)).max_abs();
  const double secs = Seconds(t0);
  return {fmin >= 0.99 && empty == 0.0 && eF == 0.0 && secs < 60.0,
          Fmt("min F %.4f (>= 0.99), empty-set max F %.1e (== 0), e_F at truth %.1e (== 0), "
              "%.1f s (< 60)",
              fmin, empty, eF, secs)};
}

// 11. Thread count does not change the inversion history.
Outcome Determinism() {
  const fs::path dir = fs::temp_directory_path() / "mlsm_acceptance_threads";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](int threads) {
    const std::string out = (dir / ("t" + std::to_string(threads))).string();
    const std::string cmd = std::string("'") + MLSM_CLI_PATH +
                            "' invert --scenario ex1 --n 65 --iters 40 --threads " +
                            std::to_string(threads) + " -o '" + out + "' > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    std::ifstream in(out + "/history.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    return std::pair{WIFEXITED(st) ? WEXITSTATUS(st) : -1, ss.str()};
  };
  const auto [c1, h1] = run(1);
  const auto [c8, h8] = run(8);
  fs::remove_all(dir);
  const bool same = !h1.empty() && h1 == h8;
  return {c1 == 0 && c8 == 0 && same,
          Fmt("exit codes %d/%d, history %zu bytes, %s", c1, c8, h1.size(),
              same ? "byte-identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"eikonal cone convergence", ConeConvergence},
      {"Godunov update vs quadratic", GodunovUpdateOracle},
      {"adjoint gradient check", GradientCheck},
      {"Sobolev identities", SobolevIdentities},
      {"reinitialization fixed point", ReinitFixedPoint},
      {"colliding fronts gap convergence", FrontGapConvergence},
      {"curvature flow", CurvatureFlow},
      {"interface-only twin inversion", InterfaceInversion},
      {"joint twin inversion", JointInversion},
      {"illumination", Illumination},
      {"thread determinism", Determinism},
  };
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));
  int failed = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[c].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
