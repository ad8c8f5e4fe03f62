#pragma once

// Ray-illumination labels: F is constant along first-arrival rays and takes
// the value 1 where the ray reaches a measurement node, 0 where it leaves
// through the rest of the boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "mlsm/errors.hpp"
#include "mlsm/grid_fields.hpp"

namespace mlsm {

struct LabelingOptions {
  double tol = 1e-9;
  int max_sweeps = 1000;
};

struct LabelingResult {
  ScalarField F;
  int sweeps_used = 0;
  int stagnant_nodes = 0;  // interior nodes with no downstream neighbor
  bool converged = false;
};

/// Solves -grad F . grad T = 0 by upwind fast sweeping. Each interior node
/// takes the weighted mean of its downstream axis neighbors (larger T), with
/// weights equal to the positive T differences.
inline LabelingResult SolveLabelingDetailed(const ScalarField& T, const BoundarySet& gamma,
                                            const LabelingOptions& opt = {}) {
  const Grid2D& g = T.grid();
  const std::size_t nx = g.nx, ny = g.ny;
  LabelingResult out;
  out.F = ScalarField(g, 0.0);
  for (std::size_t k : gamma) out.F[k] = 1.0;
  double* F = out.F.values().data();

  // Downstream neighbor and weight per axis, fixed by T.
  struct Link {
    std::size_t nb[2];
    double w[2];
  };
  std::vector<Link> links(g.size());
  std::vector<char> stagnant(g.size(), 0);
  for (std::size_t j = 1; j + 1 < ny; ++j) {
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      const std::size_t k = j * nx + i;
      Link L{};
      const std::size_t xs[2] = {k - 1, k + 1};
      const std::size_t zs[2] = {k - nx, k + nx};
      const std::size_t bx = T[xs[1]] > T[xs[0]] ? xs[1] : xs[0];
      const std::size_t bz = T[zs[1]] > T[zs[0]] ? zs[1] : zs[0];
      L.nb[0] = bx;
      L.nb[1] = bz;
      L.w[0] = std::max(T[bx] - T[k], 0.0);
      L.w[1] = std::max(T[bz] - T[k], 0.0);
      links[k] = L;
      if (L.w[0] + L.w[1] <= 0.0) {
        stagnant[k] = 1;
        ++out.stagnant_nodes;
      }
    }
  }

  auto relax = [&](std::size_t i, std::size_t j, double& change) {
    const std::size_t k = j * nx + i;
    double v;
    if (stagnant[k]) {
      v = std::max(std::max(F[k - 1], F[k + 1]), std::max(F[k - nx], F[k + nx]));
    } else {
      const Link& L = links[k];
      v = (L.w[0] * F[L.nb[0]] + L.w[1] * F[L.nb[1]]) / (L.w[0] + L.w[1]);
    }
    change = std::max(change, std::abs(v - F[k]));
    F[k] = v;
  };

  for (int cycle = 0; cycle < opt.max_sweeps; ++cycle) {
    double change = 0.0;
    for (int order = 0; order < 4; ++order) {
      const bool irev = order == 1 || order == 3;
      const bool jrev = order >= 2;
      for (std::size_t jj = 1; jj + 1 < ny; ++jj) {
        const std::size_t j = jrev ? ny - 1 - jj : jj;
        if (irev) {
          for (std::size_t ii = nx - 1; ii-- > 1;) relax(ii, j, change);
        } else {
          for (std::size_t ii = 1; ii + 1 < nx; ++ii) relax(ii, j, change);
        }
      }
    }
    out.sweeps_used = cycle + 1;
    if (change <= opt.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

inline ScalarField SolveLabeling(const ScalarField& T, const BoundarySet& gamma,
                                 const LabelingOptions& opt = {}) {
  return SolveLabelingDetailed(T, gamma, opt).F;
}

struct IlluminationMap {
  ScalarField F;
  std::vector<ScalarField> per_source;
};

/// Mean of the per-source labels, clamped to [0, 1] after checking that any
/// overshoot is below 1e-9.
inline IlluminationMap TotalIllumination(std::vector<ScalarField> labels) {
  if (labels.empty()) throw ConfigError("total illumination needs at least one label field");
  IlluminationMap out;
  const Grid2D& g = labels[0].grid();
  out.F = ScalarField(g, 0.0);
  for (const auto& f : labels) {
    if (!(f.grid() == g)) throw ConfigError("label fields on different grids");
    for (std::size_t k = 0; k < f.size(); ++k) out.F[k] += f[k];
  }
  const double inv = 1.0 / static_cast<double>(labels.size());
  for (std::size_t k = 0; k < out.F.size(); ++k) {
    double v = out.F[k] * inv;
    if (v < -1e-9 || v > 1.0 + 1e-9) {
      std::ostringstream os;
      os << "illumination " << v << " outside [0,1] at node " << k;
      throw SolverError(os.str());
    }
    out.F[k] = std::clamp(v, 0.0, 1.0);
  }
  out.per_source = std::move(labels);
  return out;
}

/// e_F = F |S - S_true|.
inline ScalarField IlluminationError(const ScalarField& S, const ScalarField& S_true,
                                     const ScalarField& F) {
  if (!(S.grid() == S_true.grid()) || !(S.grid() == F.grid())) {
    throw ConfigError("illumination error fields on different grids");
  }
  ScalarField e(S.grid());
  for (std::size_t k = 0; k < e.size(); ++k) e[k] = F[k] * std::abs(S[k] - S_true[k]);
  return e;
}

}  // namespace mlsm
