#pragma once

// Boundary traveltime misfit and its slowness gradient by the adjoint state.
//
// The adjoint transport -div(lambda grad T) = 0 is discretized as the exact
// transpose of the linearized Godunov update that produced T: for each node
// the upwind axis neighbors carry face velocities (T_k - T_up)/h, inflow faces
// take the downstream node's lambda and the Robin data enters as boundary
// flux. The system is triangular in arrival order and is solved in one pass
// over nodes sorted by decreasing T, so the resulting gradient is consistent
// with finite differences of the discrete misfit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <vector>

#include "mlsm/eikonal.hpp"
#include "mlsm/errors.hpp"
#include "mlsm/grid_fields.hpp"

namespace mlsm {

struct Survey {
  std::vector<SourceSpec> sources;
  BoundarySet gamma;
  std::vector<std::vector<double>> observed;  // per source, aligned with gamma

  void validate() const {
    if (observed.size() != sources.size()) {
      throw DataError("observed data count does not match source count");
    }
    for (const auto& obs : observed) {
      if (obs.size() != gamma.size()) {
        throw DataError("observed trace length does not match measurement set");
      }
      for (double v : obs) {
        if (!(v >= 0.0)) throw DataError("observed traveltimes must be non-negative");
      }
    }
  }
};

/// E = 1/2 sum_j sum_{k in Gamma} w_k (T_j - T*_j)^2, w_k = h (h/2 at corners).
inline double Misfit(const std::vector<std::vector<double>>& simulated,
                     const Survey& survey, const Grid2D& grid) {
  if (simulated.size() != survey.observed.size()) {
    throw DataError("simulated trace count does not match survey");
  }
  double e = 0.0;
  for (std::size_t j = 0; j < simulated.size(); ++j) {
    const auto& sim = simulated[j];
    const auto& obs = survey.observed[j];
    if (sim.size() != obs.size() || sim.size() != survey.gamma.size()) {
      throw DataError("trace length mismatch in misfit");
    }
    for (std::size_t m = 0; m < sim.size(); ++m) {
      const double r = sim[m] - obs[m];
      e += BoundaryWeight(grid, survey.gamma[m]) * r * r;
    }
  }
  return 0.5 * e;
}

struct AdjointOptions {
  double normal_guard = 1e-6;  // minimum dT/dn at a measurement node
};

struct AdjointSolution {
  ScalarField lambda;
  double residual_norm = 0.0;  // max abs residual of the discrete system
  int non_outflow_nodes = 0;   // measurement nodes zeroed by the guard
};

namespace detail {

/// Upwind axis neighbor used by the Godunov update at node k (kNone when the
/// axis term is inactive), with coefficient T_k - T_up.
struct UpwindLinks {
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t up[2] = {kNone, kNone};
  double coef[2] = {0.0, 0.0};
};

inline UpwindLinks LinksAt(const ScalarField& T, std::size_t k, std::size_t src) {
  UpwindLinks L;
  if (k == src) return L;
  const Grid2D& g = T.grid();
  const std::size_t i = g.col(k), j = g.row(k), nx = g.nx, ny = g.ny;
  auto pick = [&](int axis, bool has_lo, std::size_t lo, bool has_hi, std::size_t hi) {
    std::size_t best = UpwindLinks::kNone;
    if (has_lo) best = lo;
    if (has_hi && (best == UpwindLinks::kNone || T[hi] < T[best])) best = hi;
    if (best != UpwindLinks::kNone && T[k] > T[best] && T[best] < kUnset) {
      L.up[axis] = best;
      L.coef[axis] = T[k] - T[best];
    }
  };
  pick(0, i > 0, k - 1, i + 1 < nx, k + 1);
  pick(1, j > 0, k - nx, j + 1 < ny, k + nx);
  // In the one-sided case T_k = min + s h <= the other axis value, so that
  // axis is already inactive here.
  return L;
}

}  // namespace detail

/// Solves the adjoint state for one source. `residual` holds T - T* at the
/// measurement nodes in `gamma` order. lambda is zero on boundary nodes
/// outside gamma and at the source node.
inline AdjointSolution SolveAdjoint(const ScalarField& T, std::size_t source_node,
                                    const std::vector<double>& residual,
                                    const BoundarySet& gamma,
                                    const AdjointOptions& opt = {}) {
  const Grid2D& g = T.grid();
  if (residual.size() != gamma.size()) {
    throw DataError("adjoint residual length does not match measurement set");
  }
  const std::size_t n = g.size();
  std::vector<double> rhs(n, 0.0);
  std::vector<char> in_gamma(n, 0), pinned(n, 0);
  for (std::size_t m = 0; m < gamma.size(); ++m) {
    in_gamma[gamma[m]] = 1;
    rhs[gamma[m]] = BoundaryWeight(g, gamma[m]) * residual[m];
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (g.on_boundary(k) && !in_gamma[k]) pinned[k] = 1;
  }
  if (source_node < n) pinned[source_node] = 1;

  std::vector<detail::UpwindLinks> links(n);
  for (std::size_t k = 0; k < n; ++k) links[k] = detail::LinksAt(T, k, source_node);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&T](std::size_t a, std::size_t b) { return T[a] > T[b]; });

  AdjointSolution sol;
  sol.lambda = ScalarField(g, 0.0);
  std::vector<double> inflow(n, 0.0);
  const double guard = opt.normal_guard * g.h;
  for (std::size_t k : order) {
    double lam = 0.0;
    if (!pinned[k]) {
      const auto& L = links[k];
      const double diag = L.coef[0] + L.coef[1];
      if (diag > guard) {
        lam = (rhs[k] + inflow[k]) / diag;
      } else if (in_gamma[k] && (rhs[k] != 0.0 || inflow[k] != 0.0)) {
        ++sol.non_outflow_nodes;
      }
    }
    sol.lambda[k] = lam;
    if (lam != 0.0) {
      const auto& L = links[k];
      for (int a = 0; a < 2; ++a) {
        if (L.up[a] != detail::UpwindLinks::kNone) inflow[L.up[a]] += lam * L.coef[a];
      }
    }
  }

  // Residual of the discrete system at free nodes.
  std::vector<double> pull(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& L = links[k];
    for (int a = 0; a < 2; ++a) {
      if (L.up[a] != detail::UpwindLinks::kNone) pull[L.up[a]] += sol.lambda[k] * L.coef[a];
    }
  }
  double res = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& L = links[k];
    const double diag = L.coef[0] + L.coef[1];
    if (pinned[k] || !(diag > guard)) continue;
    res = std::max(res, std::abs(sol.lambda[k] * diag - pull[k] - rhs[k]));
  }
  sol.residual_norm = res;
  return sol;
}

/// dE/dS = sum_j lambda_j S, accumulated in source order; zero at source nodes.
inline ScalarField SlownessGradient(const std::vector<ScalarField>& lambdas,
                                    const ScalarField& S,
                                    const std::vector<SourceSpec>& sources = {}) {
  ScalarField g(S.grid(), 0.0);
  for (const auto& lam : lambdas) {
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += lam[k] * S[k];
  }
  for (const auto& s : sources) g[s.node] = 0.0;
  return g;
}

/// Node-sum pairing h^2 sum_k a_k b_k; dE = <dE/dS, dS> in this pairing.
inline double NodeInnerProduct(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s * a.grid().h * a.grid().h;
}

struct ForwardResult {
  std::vector<EikonalSolution> solutions;
  std::vector<std::vector<double>> traces;
  double misfit = 0.0;
  int unconverged = 0;
};

inline ForwardResult ForwardModel(const ScalarField& S, const Survey& survey,
                                  const EikonalOptions& eik = {}, unsigned threads = 1) {
  ForwardResult out;
  out.solutions = SolveEikonalAll(S, survey.sources, eik, threads);
  out.traces.reserve(out.solutions.size());
  for (const auto& sol : out.solutions) {
    out.traces.push_back(Trace(sol.T, survey.gamma));
    if (!sol.converged) ++out.unconverged;
  }
  out.misfit = Misfit(out.traces, survey, S.grid());
  return out;
}

struct GradientResult {
  ScalarField gradient;  // sum_j lambda_j S
  std::vector<AdjointSolution> adjoints;
  int non_outflow_nodes = 0;
};

inline GradientResult MisfitGradient(const ScalarField& S, const Survey& survey,
                                     const ForwardResult& fwd, unsigned threads = 1,
                                     const AdjointOptions& opt = {}) {
  const std::size_t J = survey.sources.size();
  GradientResult out;
  out.adjoints.resize(J);
  ParallelFor(J, threads, [&](std::size_t j) {
    std::vector<double> r(survey.gamma.size());
    for (std::size_t m = 0; m < r.size(); ++m) {
      r[m] = fwd.traces[j][m] - survey.observed[j][m];
    }
    out.adjoints[j] =
        SolveAdjoint(fwd.solutions[j].T, survey.sources[j].node, r, survey.gamma, opt);
  });
  std::vector<ScalarField> lambdas;
  lambdas.reserve(J);
  for (auto& a : out.adjoints) {
    lambdas.push_back(a.lambda);
    out.non_outflow_nodes += a.non_outflow_nodes;
  }
  out.gradient = SlownessGradient(lambdas, S, survey.sources);
  return out;
}

}  // namespace mlsm
