#pragma once

// Sobolev smoothing of parameter updates and the arc-length penalty gradient.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "mlsm/errors.hpp"
#include "mlsm/grid_fields.hpp"
#include "mlsm/mlsf.hpp"

namespace mlsm {

struct SobolevOptions {
  double rel_tol = 1e-10;
  int max_iters = 20000;
};

struct SobolevResult {
  ScalarField value;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves (I - gamma*Lap) P = p with the reflected-ghost Neumann Laplacian.
/// The operator is self-adjoint in the trapezoid inner product, so conjugate
/// gradients run on the symmetrized system W(I - gamma*Lap) P = W p with
/// Jacobi preconditioning. Convergence is measured on the unweighted residual.
inline SobolevResult SobolevSmoothDetailed(const ScalarField& p, double gamma,
                                           const SobolevOptions& opt = {}) {
  if (!(gamma >= 0.0)) throw ConfigError("Sobolev weight gamma must be >= 0");
  SobolevResult out;
  if (gamma == 0.0) {
    out.value = p;
    return out;
  }
  const Grid2D& g = p.grid();
  const std::size_t n = g.size();
  const ScalarField w = QuadratureWeights(g);
  const double c = gamma / (g.h * g.h);

  auto apply = [&](const ScalarField& x) {  // W (I - gamma Lap) x
    ScalarField y = LaplacianNeumann(x);
    for (std::size_t k = 0; k < n; ++k) y[k] = w[k] * (x[k] - gamma * y[k]);
    return y;
  };
  std::vector<double> inv_diag(n);
  for (std::size_t k = 0; k < n; ++k) inv_diag[k] = 1.0 / (w[k] * (1.0 + 4.0 * c));

  double pnorm = 0.0;
  for (std::size_t k = 0; k < n; ++k) pnorm += p[k] * p[k];
  pnorm = std::sqrt(pnorm);
  ScalarField x(g, 0.0);
  if (pnorm == 0.0) {
    out.value = x;
    return out;
  }
  ScalarField r(g);
  for (std::size_t k = 0; k < n; ++k) r[k] = w[k] * p[k];
  ScalarField z(g), d(g);
  for (std::size_t k = 0; k < n; ++k) z[k] = inv_diag[k] * r[k];
  d = z;
  double rz = 0.0;
  for (std::size_t k = 0; k < n; ++k) rz += r[k] * z[k];

  auto unweighted_residual = [&]() {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = r[k] / w[k];
      s += v * v;
    }
    return std::sqrt(s) / pnorm;
  };

  double rel = unweighted_residual();
  int it = 0;
  while (rel > opt.rel_tol && it < opt.max_iters) {
    const ScalarField q = apply(d);
    double dq = 0.0;
    for (std::size_t k = 0; k < n; ++k) dq += d[k] * q[k];
    const double alpha = rz / dq;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * d[k];
      r[k] -= alpha * q[k];
    }
    ++it;
    if (it % 50 == 0) {
      // Refresh the recursive residual to keep the stopping test honest.
      const ScalarField ax = apply(x);
      for (std::size_t k = 0; k < n; ++k) r[k] = w[k] * p[k] - ax[k];
    }
    rel = unweighted_residual();
    double rz_new = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      z[k] = inv_diag[k] * r[k];
      rz_new += r[k] * z[k];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) d[k] = z[k] + beta * d[k];
  }
  // Final check on the true residual.
  {
    const ScalarField ax = apply(x);
    for (std::size_t k = 0; k < n; ++k) r[k] = w[k] * p[k] - ax[k];
    rel = unweighted_residual();
  }
  if (rel > opt.rel_tol * 10.0) {
    std::ostringstream os;
    os << "Sobolev smoothing did not converge (relative residual " << rel << " after " << it
       << " iterations)";
    throw SolverError(os.str());
  }
  out.value = std::move(x);
  out.iterations = it;
  out.relative_residual = rel;
  return out;
}

inline ScalarField SobolevSmooth(const ScalarField& p, double gamma,
                                 const SobolevOptions& opt = {}) {
  return SobolevSmoothDetailed(p, gamma, opt).value;
}

/// Indicator of the union of tubes |phi - i_n| < tau_hat.
inline ScalarField TubeIndicator(const MultilayerLevelSet& m, double tau_hat) {
  ScalarField chi(m.grid(), 0.0);
  for (std::size_t k = 0; k < chi.size(); ++k) {
    if (m.levels.distance(m.phi[k]) < tau_hat) chi[k] = 1.0;
  }
  return chi;
}

/// Arc-length penalty gradient -chi(T_tau_hat) * Lap(phi), assuming |grad phi|
/// is close to 1 after reinitialization.
inline ScalarField ArcLengthGradient(const MultilayerLevelSet& m, double tau_hat) {
  if (!(tau_hat > 0.0)) throw ConfigError("tube width tau_hat must be positive");
  if (!(tau_hat < m.levels.half())) {
    throw ConfigError("tube width tau_hat must be smaller than half the level spacing");
  }
  ScalarField lap = LaplacianNeumann(m.phi);
  for (std::size_t k = 0; k < lap.size(); ++k) {
    lap[k] = m.levels.distance(m.phi[k]) < tau_hat ? -lap[k] : 0.0;
  }
  return lap;
}

/// dE_total/dphi = dE/dphi - gamma_phi * chi * Lap(phi).
inline ScalarField TotalGradientPhi(const ScalarField& dE_dphi, const MultilayerLevelSet& m,
                                    double gamma_phi, double tau_hat) {
  if (!(gamma_phi >= 0.0)) throw ConfigError("gamma_phi must be >= 0");
  if (gamma_phi == 0.0) return dE_dphi;
  return Axpy(dE_dphi, gamma_phi, ArcLengthGradient(m, tau_hat));
}

/// Penalty value E_r = sum_n int delta_tau(phi - i_n) |grad phi| (central
/// differences, node quadrature).
inline double ArcLengthEnergy(const MultilayerLevelSet& m, double tau) {
  const Grid2D& g = m.grid();
  const double inv2h = 0.5 / g.h;
  double e = 0.0;
  for (std::size_t j = 0; j < g.ny; ++j) {
    const std::size_t jm = j == 0 ? 0 : j - 1, jp = j + 1 == g.ny ? j : j + 1;
    const double fz = (jp - jm) == 2 ? inv2h : 2.0 * inv2h;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t im = i == 0 ? 0 : i - 1, ip = i + 1 == g.nx ? i : i + 1;
      const double fx = (ip - im) == 2 ? inv2h : 2.0 * inv2h;
      const double px = (m.phi(ip, j) - m.phi(im, j)) * fx;
      const double pz = (m.phi(i, jp) - m.phi(i, jm)) * fz;
      const double gn = std::sqrt(px * px + pz * pz);
      double dsum = 0.0;
      for (std::size_t n = 0; n < m.num_levels(); ++n) {
        dsum += SmoothDelta(m.phi(i, j) - m.levels[n], tau);
      }
      e += dsum * gn;
    }
  }
  return e * g.h * g.h;
}

}  // namespace mlsm
