#pragma once

// Frechet derivatives of the misfit with respect to the level-set function and
// the region parameters, and the fixed-step gradient-descent inversion loop.

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mlsm/adjoint.hpp"
#include "mlsm/eikonal.hpp"
#include "mlsm/errors.hpp"
#include "mlsm/mlsf.hpp"
#include "mlsm/regularize.hpp"

namespace mlsm {

/// dS/dphi = -sum_n p_n delta_tau(phi - i_n) + p_N delta_tau(phi - i_{N-1}).
inline ScalarField SlownessPhiDerivative(const SlownessModel& m) {
  m.validate();
  const std::size_t N = m.N();
  const auto& lv = m.mlsf.levels;
  const auto& phi = m.mlsf.phi;
  ScalarField d(phi.grid());
  for (std::size_t k = 0; k < d.size(); ++k) {
    double s = 0.0;
    for (std::size_t n = 0; n < N; ++n) s -= m.p[n][k] * SmoothDelta(phi[k] - lv[n], m.tau);
    s += m.p[N][k] * SmoothDelta(phi[k] - lv[N - 1], m.tau);
    d[k] = s;
  }
  return d;
}

/// dE/dphi = dS/dphi * g with g = sum_j lambda_j S.
inline ScalarField FrechetPhi(const ScalarField& g, const SlownessModel& m) {
  ScalarField d = SlownessPhiDerivative(m);
  for (std::size_t k = 0; k < d.size(); ++k) d[k] *= g[k];
  return d;
}

/// dE/dp_n = (1 - H_tau(phi - i_n)) g for n < N, dE/dp_N = H_tau(phi - i_{N-1}) g.
/// Frozen parameters get zero fields.
inline std::vector<ScalarField> FrechetP(const ScalarField& g, const SlownessModel& m) {
  m.validate();
  const std::size_t N = m.N();
  const auto& lv = m.mlsf.levels;
  const auto& phi = m.mlsf.phi;
  std::vector<ScalarField> out(N + 1, ScalarField(phi.grid(), 0.0));
  for (std::size_t n = 0; n <= N; ++n) {
    if (m.is_frozen(n)) continue;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double H = n < N ? 1.0 - SmoothHeaviside(phi[k] - lv[n], m.tau)
                             : SmoothHeaviside(phi[k] - lv[N - 1], m.tau);
      out[n][k] = H * g[k];
    }
  }
  return out;
}

struct InversionConfig {
  double epsilon = 2e-3;
  int max_iters = 5000;
  double eps_stop = 1e-8;
  int reinit_steps = 5;
  double gamma = 1.0;
  double gamma_phi = 0.0;
  double tau_hat = 0.03;
  bool update_phi = true;
  unsigned threads = 1;
  int max_step_halvings = 30;
  EikonalOptions eikonal;

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("step size epsilon must be positive");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (reinit_steps < 1) throw ConfigError("reinit_steps must be >= 1");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
    if (!(gamma_phi >= 0.0)) throw ConfigError("gamma_phi must be >= 0");
  }
};

struct HistoryEntry {
  int iter = 0;
  double E = 0.0;
  double E_total = 0.0;
};

struct InversionState {
  SlownessModel model;
  int iteration = 0;  // completed updates
  std::vector<HistoryEntry> history;
  std::vector<std::string> log;
  std::vector<EikonalSolution> solutions;  // forward solves of the final model
  bool stopped_on_tolerance = false;
};

/// Fixed-step descent on (phi, p_0..p_N):
///   S <- synth(phi, p); T_j <- eikonal; E <- misfit; stop if E < eps_stop;
///   lambda_j <- adjoint; g = sum_j lambda_j S;
///   phi~ = -h (dE/dphi - gamma_phi chi Lap(phi)); P~_n = Sobolev(-h dE/dp_n);
///   phi += eps phi~ (boundary values copied from the interior),
///   p_n += eps P~_n; reinitialize phi.
/// The factor h turns the L2 densities into nodal gradients of the
/// receiver-sum misfit E/h.
/// History holds one entry per evaluated model, the last one after the final
/// update. `on_iteration` runs after each evaluation and sees the model that
/// was just evaluated.
inline InversionState Invert(const Survey& survey, const SlownessModel& initial,
                             const InversionConfig& cfg,
                             const std::function<void(const InversionState&)>& on_iteration = {}) {
  cfg.validate();
  survey.validate();
  initial.validate();
  InversionState st;
  st.model = initial;
  const Grid2D& grid = initial.mlsf.grid();
  const std::size_t N = initial.N();
  ScalarField S = SynthesizeSlowness(st.model);

  for (int pass = 1;; ++pass) {
    ForwardResult fwd = ForwardModel(S, survey, cfg.eikonal, cfg.threads);
    if (fwd.unconverged > 0) {
      std::ostringstream os;
      os << "iter " << pass << ": " << fwd.unconverged << " eikonal solve(s) hit the sweep cap";
      st.log.push_back(os.str());
    }
    HistoryEntry h;
    h.iter = pass;
    h.E = fwd.misfit;
    h.E_total = cfg.gamma_phi > 0.0
                    ? fwd.misfit + cfg.gamma_phi * ArcLengthEnergy(st.model.mlsf, st.model.tau)
                    : fwd.misfit;
    st.history.push_back(h);
    if (on_iteration) on_iteration(st);
    if (h.E < cfg.eps_stop) {
      st.stopped_on_tolerance = true;
      st.solutions = std::move(fwd.solutions);
      break;
    }
    if (st.iteration >= cfg.max_iters) {
      st.solutions = std::move(fwd.solutions);
      break;
    }

    GradientResult gr = MisfitGradient(S, survey, fwd, cfg.threads);
    if (gr.non_outflow_nodes > 0) {
      std::ostringstream os;
      os << "iter " << pass << ": " << gr.non_outflow_nodes
         << " measurement node(s) without outflow; adjoint set to zero there";
      st.log.push_back(os.str());
    }
    ScalarField phi_dir(grid, 0.0);
    if (cfg.update_phi) {
      phi_dir = TotalGradientPhi(FrechetPhi(gr.gradient, st.model), st.model.mlsf,
                                 cfg.gamma_phi, cfg.tau_hat);
      phi_dir *= -grid.h;
    }
    const auto dEdp = FrechetP(gr.gradient, st.model);
    std::vector<ScalarField> p_dir(N + 1);
    for (std::size_t n = 0; n <= N; ++n) {
      if (st.model.is_frozen(n)) continue;
      p_dir[n] = SobolevSmooth(-grid.h * dEdp[n], cfg.gamma);
    }

    // Update with positivity guard.
    double step = cfg.epsilon;
    for (int attempt = 0;; ++attempt) {
      SlownessModel trial = st.model;
      if (cfg.update_phi) {
        trial.mlsf.phi = Axpy(st.model.mlsf.phi, step, phi_dir);
        ExtendToBoundary(trial.mlsf.phi);
        trial.mlsf = Reinitialize(trial.mlsf, ReinitOptions{cfg.reinit_steps, 0.0});
      }
      for (std::size_t n = 0; n <= N; ++n) {
        if (!st.model.is_frozen(n)) trial.p[n] = Axpy(st.model.p[n], step, p_dir[n]);
      }
      try {
        S = SynthesizeSlowness(trial);
      } catch (const InvalidSlownessError&) {
        if (attempt >= cfg.max_step_halvings) {
          throw SolverError("step size underflow: synthesized slowness stays non-positive");
        }
        std::ostringstream os;
        os << "iter " << pass << ": non-positive slowness, step halved to " << step * 0.5;
        st.log.push_back(os.str());
        step *= 0.5;
        continue;
      }
      st.model = std::move(trial);
      break;
    }
    ++st.iteration;
  }
  return st;
}

}  // namespace mlsm
