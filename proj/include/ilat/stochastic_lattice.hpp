#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ilat/distributions.hpp"
#include "ilat/lattice_maps.hpp"

namespace ilat {

/// Row-major 2-D array of doubles with 0-based indexing.
struct Array2 {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Array2() = default;
    Array2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    bool empty() const { return data.empty(); }
};

/// A filled quadrant: bulk variables X, horizontal/vertical increment (or
/// occupation/passing) variables U and V, and optionally partition values Z
/// (log domain for polymer models). Index (n, m) with row/column 0 holding
/// the boundary data, bulk cells at n, m >= 1.
struct QuadrantField {
    std::size_t n_max = 0, m_max = 0;
    LocalMap model;
    Array2 X;      // bulk variables, valid on [1..n_max] x [1..m_max]
    Array2 U;      // U(n, 0) boundary column for each row n
    Array2 V;      // V(0, m) boundary row for each column m (unused for vertex runs)
    Array2 Z;      // partition values; log domain when log_z is set
    Array2 drive;  // uniform driving variables (vertex model only)
    bool log_z = false;

    /// Largest violation of the defining recursion over all interior cells
    /// (relative for log-domain fields).
    double max_recursion_residual() const;

    std::string to_csv() const;

    /// Raw row-major dump of the present arrays plus a JSON sidecar describing
    /// shapes, order, and the model.
    void write_binary(const std::string& path, const std::string& sidecar_path) const;
};

/// Fill a quadrant with the model's increment kernel from i.i.d. boundary
/// data (row law `boundary_x`, column law `boundary_u`) and i.i.d. bulk
/// variables. The polymer variants keep Z in log domain.
QuadrantField run_quadrant(const LocalMap& model, const DistSpec& boundary_x,
                           const DistSpec& boundary_u, const DistSpec& bulk, std::size_t n,
                           std::size_t m, RngStream& rng);

/// Exact last-passage values by enumerating every up-right path; the oracle
/// counterpart of the dynamic recursion. Throws TooLarge beyond 12 x 12.
Array2 dlpp_bruteforce(const Array2& weights);

/// Last-passage values by the dynamic recursion on the same weights.
Array2 dlpp_recursion(const Array2& weights);

enum class PolymerMode { site, edge };

/// log Z by enumerating every path (log-sum-exp accumulation). For edge mode,
/// a right step into (k,l) contributes weights(k,l) and an up step h(weights(k,l))
/// with h(x) = A*x + B. Throws TooLarge beyond 12 x 12.
Array2 polymer_bruteforce(const Array2& weights, PolymerMode mode, double A = 0.0, double B = 0.0);

/// log Z by the dynamic recursion on the same weights.
Array2 polymer_recursion(const Array2& weights, PolymerMode mode, double A = 0.0, double B = 0.0);

/// Stochastic vertex run: occupation X(n, t), passing bits U(n, t), driven by
/// per-cell uniforms. Boundary: X(n, 0) ~ boundary_x, U(0, t) ~ boundary_u.
QuadrantField hsv_run(const LocalMap& params, const DistSpec& boundary_x,
                      const DistSpec& boundary_u, std::size_t n, std::size_t t, RngStream& rng);

/// Site-dependent kernels R_{n,t} with per-row laws mu_n for X(n,0) and
/// per-column laws nu_t for U(0,t). Supports deterministic two-argument
/// kernels (udKdV, dKdV) and the vertex kernel.
QuadrantField run_quadrant_inhomogeneous(
    const std::function<LocalMap(std::size_t n, std::size_t t)>& kernel,
    const std::vector<DistSpec>& row_boundary, const std::vector<DistSpec>& col_boundary,
    std::size_t n, std::size_t t, RngStream& rng);

}  // namespace ilat
