#pragma once

// Uniform 2-D grid, node-indexed scalar fields, discrete operators and the
// plain-text field file format shared by all solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mlsm/errors.hpp"

namespace mlsm {

/// Marks nodes not yet reached by a traveltime solve.
inline constexpr double kUnset = 1e10;

struct Grid2D {
  double xmin = 0.0, xmax = 1.0, zmin = 0.0, zmax = 1.0;
  std::size_t nx = 3, ny = 3;
  double h = 0.5;

  std::size_t size() const { return nx * ny; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
  std::size_t col(std::size_t idx) const { return idx % nx; }
  std::size_t row(std::size_t idx) const { return idx / nx; }
  double x(std::size_t i) const { return xmin + static_cast<double>(i) * h; }
  double z(std::size_t j) const { return zmin + static_cast<double>(j) * h; }

  bool on_boundary(std::size_t i, std::size_t j) const {
    return i == 0 || j == 0 || i + 1 == nx || j + 1 == ny;
  }
  bool on_boundary(std::size_t idx) const { return on_boundary(col(idx), row(idx)); }
  bool is_corner(std::size_t i, std::size_t j) const {
    return (i == 0 || i + 1 == nx) && (j == 0 || j + 1 == ny);
  }

  /// Nearest node to (px, pz), ties toward the lower index.
  std::size_t nearest_node(double px, double pz) const {
    auto snap = [this](double v, double lo, std::size_t n) {
      double t = (v - lo) / h;
      double fl = std::floor(t);
      std::size_t k = t - fl > 0.5 ? static_cast<std::size_t>(fl) + 1
                                   : static_cast<std::size_t>(std::max(fl, 0.0));
      if (t < 0.0) k = 0;
      return std::min(k, n - 1);
    };
    return index(snap(px, xmin, nx), snap(pz, zmin, ny));
  }

  bool operator==(const Grid2D& o) const {
    return nx == o.nx && ny == o.ny && xmin == o.xmin && xmax == o.xmax &&
           zmin == o.zmin && zmax == o.zmax;
  }
};

/// Builds a grid with square cells. Throws ConfigError on degenerate bounds,
/// too few nodes or non-square cells.
inline Grid2D MakeGrid(double xmin, double xmax, double zmin, double zmax,
                       std::size_t nx, std::size_t ny) {
  if (!(xmax > xmin) || !(zmax > zmin) || !std::isfinite(xmin) ||
      !std::isfinite(xmax) || !std::isfinite(zmin) || !std::isfinite(zmax)) {
    throw ConfigError("grid bounds must be finite and strictly ordered");
  }
  if (nx < 3 || ny < 3) throw ConfigError("grid needs at least 3 nodes per axis");
  const double hx = (xmax - xmin) / static_cast<double>(nx - 1);
  const double hz = (zmax - zmin) / static_cast<double>(ny - 1);
  if (std::abs(hx - hz) > 1e-12 * std::max(hx, hz)) {
    std::ostringstream os;
    os << "grid cells are not square (hx=" << hx << ", hz=" << hz << ")";
    throw ConfigError(os.str());
  }
  Grid2D g;
  g.xmin = xmin;
  g.xmax = xmax;
  g.zmin = zmin;
  g.zmax = zmax;
  g.nx = nx;
  g.ny = ny;
  g.h = hx;
  return g;
}

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid2D& grid, double value = 0.0)
      : grid_(grid), values_(grid.size(), value) {}
  ScalarField(const Grid2D& grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw DataError("field value count does not match grid");
    }
  }

  /// Samples f(x, z) at every node.
  static ScalarField Sample(const Grid2D& grid,
                            const std::function<double(double, double)>& f) {
    ScalarField out(grid);
    for (std::size_t j = 0; j < grid.ny; ++j) {
      for (std::size_t i = 0; i < grid.nx; ++i) {
        out(i, j) = f(grid.x(i), grid.z(j));
      }
    }
    return out;
  }

  const Grid2D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[grid_.index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const {
    return values_[grid_.index(i, j)];
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  ScalarField& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(double s, ScalarField a) { return a *= s; }

/// a + s*b, nodewise.
inline ScalarField Axpy(const ScalarField& a, double s, const ScalarField& b) {
  ScalarField out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += s * b[k];
  return out;
}

/// Ordered, duplicate-free list of boundary node indices (the measurement set).
class BoundarySet {
 public:
  BoundarySet() = default;
  BoundarySet(const Grid2D& grid, std::vector<std::size_t> nodes)
      : nodes_(std::move(nodes)) {
    std::vector<char> seen(grid.size(), 0);
    for (std::size_t k : nodes_) {
      if (k >= grid.size() || !grid.on_boundary(k)) {
        throw ConfigError("measurement node is not on the grid boundary");
      }
      if (seen[k]) throw ConfigError("duplicate measurement node");
      seen[k] = 1;
    }
  }

  /// Every boundary node, in node-index order.
  static BoundarySet Full(const Grid2D& grid) {
    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid.on_boundary(k)) nodes.push_back(k);
    }
    return BoundarySet(grid, std::move(nodes));
  }

  /// Boundary nodes on the named sides ("left", "right", "bottom", "top"),
  /// in node-index order. zmin is "bottom".
  static BoundarySet Sides(const Grid2D& grid, const std::vector<std::string>& sides) {
    auto has = [&](const char* s) {
      return std::find(sides.begin(), sides.end(), s) != sides.end();
    };
    for (const auto& s : sides) {
      if (s != "left" && s != "right" && s != "bottom" && s != "top" && s != "all") {
        throw ConfigError("unknown boundary side '" + s + "'");
      }
    }
    const bool all = has("all");
    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const std::size_t i = grid.col(k), j = grid.row(k);
      if ((all && grid.on_boundary(k)) || (has("left") && i == 0) ||
          (has("right") && i + 1 == grid.nx) || (has("bottom") && j == 0) ||
          (has("top") && j + 1 == grid.ny)) {
        nodes.push_back(k);
      }
    }
    return BoundarySet(grid, std::move(nodes));
  }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  std::size_t operator[](std::size_t k) const { return nodes_[k]; }
  const std::vector<std::size_t>& nodes() const { return nodes_; }
  auto begin() const { return nodes_.begin(); }
  auto end() const { return nodes_.end(); }

 private:
  std::vector<std::size_t> nodes_;
};

/// Boundary line-integral weight of a boundary node: h, halved at corners.
inline double BoundaryWeight(const Grid2D& g, std::size_t idx) {
  return g.is_corner(g.col(idx), g.row(idx)) ? 0.5 * g.h : g.h;
}

/// Trapezoid area weights (1 inside, 1/2 on edges, 1/4 at corners); the
/// discrete L2 inner product under which the Neumann Laplacian is self-adjoint.
inline ScalarField QuadratureWeights(const Grid2D& g) {
  ScalarField w(g, 1.0);
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      double wi = (i == 0 || i + 1 == g.nx) ? 0.5 : 1.0;
      double wj = (j == 0 || j + 1 == g.ny) ? 0.5 : 1.0;
      w(i, j) = wi * wj;
    }
  }
  return w;
}

/// Weighted inner product sum_k w_k a_k b_k h^2.
inline double InnerProduct(const ScalarField& a, const ScalarField& b) {
  const Grid2D& g = a.grid();
  const double h2 = g.h * g.h;
  double s = 0.0;
  for (std::size_t j = 0; j < g.ny; ++j) {
    const double wj = (j == 0 || j + 1 == g.ny) ? 0.5 : 1.0;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double wi = (i == 0 || i + 1 == g.nx) ? 0.5 : 1.0;
      const std::size_t k = g.index(i, j);
      s += wi * wj * a[k] * b[k];
    }
  }
  return s * h2;
}

/// Overwrites boundary values with the adjacent interior value (corners take
/// the diagonal neighbor), i.e. a zero normal derivative.
inline void ExtendToBoundary(ScalarField& f) {
  const Grid2D& g = f.grid();
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (!g.on_boundary(i, j)) continue;
      const std::size_t ii = std::clamp<std::size_t>(i, 1, g.nx - 2);
      const std::size_t jj = std::clamp<std::size_t>(j, 1, g.ny - 2);
      f(i, j) = f(ii, jj);
    }
  }
}

/// Five-point Laplacian with reflected ghost values at the boundary
/// (homogeneous Neumann). Rows sum to zero.
inline ScalarField LaplacianNeumann(const ScalarField& f) {
  const Grid2D& g = f.grid();
  const double inv_h2 = 1.0 / (g.h * g.h);
  ScalarField out(g);
  const std::size_t nx = g.nx, ny = g.ny;
  for (std::size_t j = 0; j < ny; ++j) {
    const std::size_t jm = j == 0 ? 1 : j - 1;
    const std::size_t jp = j + 1 == ny ? ny - 2 : j + 1;
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t im = i == 0 ? 1 : i - 1;
      const std::size_t ip = i + 1 == nx ? nx - 2 : i + 1;
      const double c = f(i, j);
      out(i, j) = (f(im, j) + f(ip, j) + f(i, jm) + f(i, jp) - 4.0 * c) * inv_h2;
    }
  }
  return out;
}

enum class FrontDirection { kExpand, kContract };

/// Godunov upwind |grad f| for a front moving with sign-definite normal speed
/// (kExpand: v > 0 in f_t + v|grad f| = 0). Missing one-sided differences at
/// the boundary are replaced by the available one.
inline ScalarField UpwindGradNorm(const ScalarField& f, FrontDirection dir) {
  const Grid2D& g = f.grid();
  const double inv_h = 1.0 / g.h;
  const std::size_t nx = g.nx, ny = g.ny;
  ScalarField out(g);
  const bool expand = dir == FrontDirection::kExpand;
  auto axis = [expand](double dm, double dp) {
    if (expand) {
      const double a = std::max(dm, 0.0), b = std::min(dp, 0.0);
      return std::max(a * a, b * b);
    }
    const double a = std::min(dm, 0.0), b = std::max(dp, 0.0);
    return std::max(a * a, b * b);
  };
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double c = f(i, j);
      double dxm = i > 0 ? (c - f(i - 1, j)) * inv_h : 0.0;
      double dxp = i + 1 < nx ? (f(i + 1, j) - c) * inv_h : 0.0;
      if (i == 0) dxm = dxp;
      if (i + 1 == nx) dxp = dxm;
      double dzm = j > 0 ? (c - f(i, j - 1)) * inv_h : 0.0;
      double dzp = j + 1 < ny ? (f(i, j + 1) - c) * inv_h : 0.0;
      if (j == 0) dzm = dzp;
      if (j + 1 == ny) dzp = dzm;
      out(i, j) = std::sqrt(axis(dxm, dxp) + axis(dzm, dzp));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Field files: "nx ny xmin xmax zmin zmax" then ny lines of nx values,
// x fastest, z increasing, 17 significant digits.

inline std::string FormatReal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void WriteField(const ScalarField& f, std::ostream& os) {
  const Grid2D& g = f.grid();
  os << g.nx << ' ' << g.ny << ' ' << FormatReal(g.xmin) << ' ' << FormatReal(g.xmax)
     << ' ' << FormatReal(g.zmin) << ' ' << FormatReal(g.zmax) << '\n';
  std::string line;
  for (std::size_t j = 0; j < g.ny; ++j) {
    line.clear();
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (i) line.push_back(' ');
      line += FormatReal(f(i, j));
    }
    line.push_back('\n');
    os << line;
  }
}

inline void WriteField(const ScalarField& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  WriteField(f, os);
  if (!os) throw IoError("failed writing '" + path + "'");
}

inline ScalarField ReadField(std::istream& is, const std::string& name = "<stream>") {
  std::string header;
  if (!std::getline(is, header)) throw FormatError(name + ": missing header");
  std::istringstream hs(header);
  long long nx = 0, ny = 0;
  double b[4];
  if (!(hs >> nx >> ny >> b[0] >> b[1] >> b[2] >> b[3])) {
    throw FormatError(name + ": malformed header '" + header + "'");
  }
  std::string extra;
  if (hs >> extra) throw FormatError(name + ": trailing tokens in header");
  if (nx < 3 || ny < 3) throw FormatError(name + ": header node counts must be >= 3");
  Grid2D g;
  try {
    g = MakeGrid(b[0], b[1], b[2], b[3], static_cast<std::size_t>(nx),
                 static_cast<std::size_t>(ny));
  } catch (const ConfigError& e) {
    throw FormatError(name + ": " + e.what());
  }
  std::vector<double> values;
  values.reserve(g.size());
  std::string tok;
  while (is >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
      throw FormatError(name + ": bad value '" + tok + "'");
    }
    values.push_back(v);
  }
  if (values.size() != g.size()) {
    std::ostringstream os;
    os << name << ": expected " << g.size() << " values, found " << values.size();
    throw FormatError(os.str());
  }
  return ScalarField(g, std::move(values));
}

inline ScalarField ReadField(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  return ReadField(is, path);
}

}  // namespace mlsm
