#pragma once

// First-arrival traveltimes by fast sweeping: Gauss-Seidel passes in the four
// alternating orderings with the first-order Godunov upwind update.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "mlsm/errors.hpp"
#include "mlsm/grid_fields.hpp"
#include "mlsm/parallel.hpp"

namespace mlsm {

struct SourceSpec {
  double x = 0.0;
  double z = 0.0;
  std::size_t node = 0;  // nearest grid node, ties toward the lower index

  static SourceSpec At(const Grid2D& grid, double x, double z) {
    return SourceSpec{x, z, grid.nearest_node(x, z)};
  }
};

struct EikonalOptions {
  double tol = 1e-9;
  int max_sweeps = 1000;  // cap on four-ordering cycles
};

struct EikonalSolution {
  ScalarField T;
  int sweeps_used = 0;
  double final_update = 0.0;
  bool converged = false;
};

/// Local solve of the upwind quadratic (T-a)^2 + (T-b)^2 = (s h)^2 with the
/// causal one-sided fallback. a, b are the smaller neighbor values per axis.
inline double GodunovUpdate(double a, double b, double s, double h) {
  if (!(s > 0.0)) throw InvalidSlownessError("slowness must be positive");
  if (!(h > 0.0)) throw ConfigError("mesh size must be positive");
  const double sh = s * h;
  const double d = a - b;
  if (std::abs(d) >= sh) return std::min(a, b) + sh;
  return 0.5 * (a + b + std::sqrt(2.0 * sh * sh - d * d));
}

namespace detail {

inline void CheckSlowness(const ScalarField& S) {
  for (std::size_t k = 0; k < S.size(); ++k) {
    if (!(S[k] > 0.0) || !std::isfinite(S[k])) {
      std::ostringstream os;
      os << "non-positive slowness " << S[k] << " at node " << k;
      throw InvalidSlownessError(os.str());
    }
  }
}

}  // namespace detail

inline EikonalSolution SolveEikonal(const ScalarField& S, const SourceSpec& src,
                                    const EikonalOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw ConfigError("eikonal tolerance must be positive");
  detail::CheckSlowness(S);
  const Grid2D& g = S.grid();
  if (src.node >= g.size()) throw ConfigError("source node outside grid");
  const std::size_t nx = g.nx, ny = g.ny;
  const double h = g.h;

  EikonalSolution sol;
  sol.T = ScalarField(g, kUnset);
  double* T = sol.T.values().data();
  const double* s = S.values().data();
  T[src.node] = 0.0;

  auto relax = [&](std::size_t i, std::size_t j, double& change) {
    const std::size_t k = j * nx + i;
    if (k == src.node) return;
    const double a = std::min(i > 0 ? T[k - 1] : kUnset, i + 1 < nx ? T[k + 1] : kUnset);
    const double b =
        std::min(j > 0 ? T[k - nx] : kUnset, j + 1 < ny ? T[k + nx] : kUnset);
    if (std::min(a, b) >= kUnset) return;
    const double sh = s[k] * h;
    const double d = a - b;
    const double t = std::abs(d) >= sh ? std::min(a, b) + sh
                                       : 0.5 * (a + b + std::sqrt(2.0 * sh * sh - d * d));
    if (t < T[k]) {
      change = std::max(change, T[k] - t);
      T[k] = t;
    }
  };

  for (int cycle = 0; cycle < opt.max_sweeps; ++cycle) {
    double change = 0.0;
    for (int order = 0; order < 4; ++order) {
      const bool irev = order == 1 || order == 3;
      const bool jrev = order >= 2;
      for (std::size_t jj = 0; jj < ny; ++jj) {
        const std::size_t j = jrev ? ny - 1 - jj : jj;
        if (irev) {
          for (std::size_t ii = nx; ii-- > 0;) relax(ii, j, change);
        } else {
          for (std::size_t ii = 0; ii < nx; ++ii) relax(ii, j, change);
        }
      }
    }
    sol.sweeps_used = cycle + 1;
    sol.final_update = change;
    if (change <= opt.tol) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

/// Independent solves for each source; output order follows `sources`.
inline std::vector<EikonalSolution> SolveEikonalAll(const ScalarField& S,
                                                    const std::vector<SourceSpec>& sources,
                                                    const EikonalOptions& opt = {},
                                                    unsigned threads = 1) {
  detail::CheckSlowness(S);
  std::vector<EikonalSolution> out(sources.size());
  ParallelFor(sources.size(), threads,
              [&](std::size_t k) { out[k] = SolveEikonal(S, sources[k], opt); });
  return out;
}

/// Values of a field at the measurement nodes.
inline std::vector<double> Trace(const ScalarField& f, const BoundarySet& gamma) {
  std::vector<double> out;
  out.reserve(gamma.size());
  for (std::size_t k : gamma) out.push_back(f[k]);
  return out;
}

}  // namespace mlsm
