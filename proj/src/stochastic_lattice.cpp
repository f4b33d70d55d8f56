#include "ilat/stochastic_lattice.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ilat {

namespace {

constexpr std::size_t kOracleCap = 12;

void require_oracle_scale(const Array2& w) {
    if (w.rows > kOracleCap || w.cols > kOracleCap)
        fail(ErrorKind::TooLarge, "brute-force path enumeration capped at 12 x 12");
    if (w.empty()) fail(ErrorKind::InvalidParams, "empty weight array");
}

// Online log-sum-exp accumulator.
struct LogSum {
    double m = -kInf, s = 0.0;
    void add(double x) {
        if (x == -kInf) return;
        if (x <= m) {
            s += std::exp(x - m);
        } else {
            s = s * std::exp(m - x) + 1.0;
            m = x;
        }
    }
    double value() const { return m == -kInf ? -kInf : m + std::log(s); }
};

}  // namespace

double QuadrantField::max_recursion_residual() const {
    double worst = 0.0;
    auto relerr = [](double a, double b) {
        return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
    };
    for (std::size_t n = 1; n <= n_max; ++n) {
        for (std::size_t m = 1; m <= m_max; ++m) {
            switch (model.family) {
                case MapFamily::R_DLPP: {
                    Pair out = quadrant_kernel(model, X(n, m), U(n, m - 1), V(n - 1, m));
                    worst = std::max({worst, std::fabs(out[0] - U(n, m)),
                                      std::fabs(out[1] - V(n, m))});
                    break;
                }
                case MapFamily::R_RPs: {
                    Pair out = quadrant_kernel(model, 1.0 / X(n, m), 1.0 / U(n, m - 1),
                                               1.0 / V(n - 1, m));
                    worst = std::max({worst, relerr(1.0 / out[0], U(n, m)),
                                      relerr(1.0 / out[1], V(n, m))});
                    break;
                }
                case MapFamily::R_RPe: {
                    Pair out = quadrant_kernel(model, X(n, m), U(n, m - 1), V(n - 1, m));
                    worst = std::max({worst, relerr(out[0], U(n, m)), relerr(out[1], V(n, m))});
                    break;
                }
                case MapFamily::R_HSV: {
                    Pair out = quadrant_kernel(model, drive(n, m), X(n, m - 1), U(n - 1, m));
                    worst = std::max({worst, std::fabs(out[0] - X(n, m)),
                                      std::fabs(out[1] - U(n, m))});
                    break;
                }
                default: fail(ErrorKind::UnsupportedFamily, "not a quadrant model");
            }
        }
    }
    return worst;
}

std::string QuadrantField::to_csv() const {
    std::ostringstream os;
    os << "n,m,X,U,V,Z\n";
    for (std::size_t n = 0; n <= n_max; ++n) {
        for (std::size_t m = 0; m <= m_max; ++m) {
            os << n << ',' << m << ',';
            if (!X.empty() && n >= 1 && m >= 1) os << X(n, m);
            os << ',';
            if (!U.empty()) os << U(n, m);
            os << ',';
            if (!V.empty()) os << V(n, m);
            os << ',';
            if (!Z.empty()) os << Z(n, m);
            os << '\n';
        }
    }
    return os.str();
}

void QuadrantField::write_binary(const std::string& path, const std::string& sidecar_path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::ConfigError, "cannot open '" + path + "' for writing");
    nlohmann::json sidecar;
    sidecar["model"] = nlohmann::json::parse(model.to_json_string());
    sidecar["dtype"] = "float64-little-endian";
    sidecar["order"] = nlohmann::json::array();
    auto dump = [&](const char* name, const Array2& a) {
        if (a.empty()) return;
        out.write(reinterpret_cast<const char*>(a.data.data()),
                  static_cast<std::streamsize>(a.data.size() * sizeof(double)));
        nlohmann::json entry;
        entry["name"] = name;
        entry["rows"] = a.rows;
        entry["cols"] = a.cols;
        sidecar["order"].push_back(entry);
    };
    dump("X", X);
    dump("U", U);
    dump("V", V);
    dump("Z", Z);
    dump("drive", drive);
    std::ofstream side(sidecar_path);
    if (!side) fail(ErrorKind::ConfigError, "cannot open '" + sidecar_path + "' for writing");
    side << sidecar.dump(2) << '\n';
}

QuadrantField run_quadrant(const LocalMap& model, const DistSpec& boundary_x,
                           const DistSpec& boundary_u, const DistSpec& bulk, std::size_t n,
                           std::size_t m, RngStream& rng) {
    if (n < 1 || m < 1) fail(ErrorKind::InvalidParams, "quadrant dimensions must be >= 1");
    if (model.family == MapFamily::R_HSV) return hsv_run(model, boundary_x, boundary_u, n, m, rng);
    if (model.family != MapFamily::R_DLPP && model.family != MapFamily::R_RPs &&
        model.family != MapFamily::R_RPe)
        fail(ErrorKind::UnsupportedFamily, "not a quadrant kernel");

    Distribution bx(boundary_x), bu(boundary_u), bb(bulk);
    bool polymer = model.family != MapFamily::R_DLPP;
    if (polymer) {
        if (bx.support_min() < 0 || bu.support_min() < 0 || bb.support_min() < 0)
            fail(ErrorKind::DomainError, "polymer models need nonnegative weight distributions");
    }

    QuadrantField f;
    f.n_max = n;
    f.m_max = m;
    f.model = model;
    f.X = Array2(n + 1, m + 1);
    f.U = Array2(n + 1, m + 1);
    f.V = Array2(n + 1, m + 1);
    f.Z = Array2(n + 1, m + 1);
    f.log_z = polymer;

    RngStream master(rng.next_u64());
    RngStream srow = master.child(0), scol = master.child(1), sbulk = master.child(2);
    for (std::size_t i = 1; i <= n; ++i) f.U(i, 0) = bx.sample(srow);
    for (std::size_t j = 1; j <= m; ++j) f.V(0, j) = bu.sample(scol);
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j) f.X(i, j) = bb.sample(sbulk);

    // Partition boundary.
    f.Z(0, 0) = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
        f.Z(i, 0) = f.Z(i - 1, 0) + (polymer ? std::log(f.U(i, 0)) : f.U(i, 0));
    for (std::size_t j = 1; j <= m; ++j)
        f.Z(0, j) = f.Z(0, j - 1) + (polymer ? std::log(f.V(0, j)) : f.V(0, j));

    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            Pair out;
            if (model.family == MapFamily::R_RPs) {
                Pair inv = quadrant_kernel(model, 1.0 / f.X(i, j), 1.0 / f.U(i, j - 1),
                                           1.0 / f.V(i - 1, j));
                out = {1.0 / inv[0], 1.0 / inv[1]};
            } else {
                out = quadrant_kernel(model, f.X(i, j), f.U(i, j - 1), f.V(i - 1, j));
            }
            f.U(i, j) = out[0];
            f.V(i, j) = out[1];
            f.Z(i, j) = f.Z(i - 1, j) + (polymer ? std::log(f.U(i, j)) : f.U(i, j));
        }
    }
    return f;
}

Array2 dlpp_recursion(const Array2& weights) {
    Array2 z(weights.rows, weights.cols);
    for (std::size_t i = 0; i < weights.rows; ++i) {
        for (std::size_t j = 0; j < weights.cols; ++j) {
            double best = -kInf;
            if (i == 0 && j == 0) best = 0.0;
            if (i > 0) best = std::max(best, z(i - 1, j));
            if (j > 0) best = std::max(best, z(i, j - 1));
            z(i, j) = weights(i, j) + best;
        }
    }
    return z;
}

namespace {

template <typename Visit>
void enumerate_paths(std::size_t ti, std::size_t tj, Visit&& visit) {
    // Walk every up-right path from (0,0) to (ti,tj); `visit` sees the step
    // list as a bitmask walk: steps[k] true means a step in the +i direction.
    std::vector<bool> steps(ti + tj, false);
    std::fill(steps.begin(), steps.begin() + static_cast<long>(ti), true);
    std::sort(steps.begin(), steps.end());
    do {
        visit(steps);
    } while (std::next_permutation(steps.begin(), steps.end()));
}

}  // namespace

Array2 dlpp_bruteforce(const Array2& weights) {
    require_oracle_scale(weights);
    Array2 z(weights.rows, weights.cols, -kInf);
    for (std::size_t ti = 0; ti < weights.rows; ++ti) {
        for (std::size_t tj = 0; tj < weights.cols; ++tj) {
            double best = -kInf;
            enumerate_paths(ti, tj, [&](const std::vector<bool>& steps) {
                double sum = weights(0, 0);
                std::size_t i = 0, j = 0;
                for (bool up : steps) {
                    if (up) ++i; else ++j;
                    sum += weights(i, j);
                }
                best = std::max(best, sum);
            });
            z(ti, tj) = best;
        }
    }
    return z;
}

Array2 polymer_recursion(const Array2& weights, PolymerMode mode, double A, double B) {
    Array2 z(weights.rows, weights.cols, -kInf);
    for (std::size_t i = 0; i < weights.rows; ++i) {
        for (std::size_t j = 0; j < weights.cols; ++j) {
            if (i == 0 && j == 0) {
                z(0, 0) = mode == PolymerMode::site ? std::log(weights(0, 0)) : 0.0;
                continue;
            }
            LogSum acc;
            if (mode == PolymerMode::site) {
                if (i > 0) acc.add(z(i - 1, j));
                if (j > 0) acc.add(z(i, j - 1));
                z(i, j) = std::log(weights(i, j)) + acc.value();
            } else {
                double h = A * weights(i, j) + B;
                if (i > 0) acc.add(std::log(weights(i, j)) + z(i - 1, j));
                if (j > 0) acc.add(std::log(h) + z(i, j - 1));
                z(i, j) = acc.value();
            }
        }
    }
    return z;
}

Array2 polymer_bruteforce(const Array2& weights, PolymerMode mode, double A, double B) {
    require_oracle_scale(weights);
    for (double w : weights.data)
        if (!(w > 0.0) && mode == PolymerMode::site)
            fail(ErrorKind::DomainError, "site weights must be positive");
    Array2 z(weights.rows, weights.cols, -kInf);
    for (std::size_t ti = 0; ti < weights.rows; ++ti) {
        for (std::size_t tj = 0; tj < weights.cols; ++tj) {
            LogSum acc;
            enumerate_paths(ti, tj, [&](const std::vector<bool>& steps) {
                double lw = mode == PolymerMode::site ? std::log(weights(0, 0)) : 0.0;
                std::size_t i = 0, j = 0;
                for (bool up : steps) {
                    if (up) {
                        ++i;
                        lw += std::log(weights(i, j));
                    } else {
                        ++j;
                        lw += mode == PolymerMode::site ? std::log(weights(i, j))
                                                        : std::log(A * weights(i, j) + B);
                    }
                }
                acc.add(lw);
            });
            z(ti, tj) = acc.value();
        }
    }
    return z;
}

QuadrantField hsv_run(const LocalMap& params, const DistSpec& boundary_x,
                      const DistSpec& boundary_u, std::size_t n, std::size_t t, RngStream& rng) {
    validate(params);
    return run_quadrant_inhomogeneous([&](std::size_t, std::size_t) { return params; },
                                      std::vector<DistSpec>(n, boundary_x),
                                      std::vector<DistSpec>(t, boundary_u), n, t, rng);
}

QuadrantField run_quadrant_inhomogeneous(
    const std::function<LocalMap(std::size_t n, std::size_t t)>& kernel,
    const std::vector<DistSpec>& row_boundary, const std::vector<DistSpec>& col_boundary,
    std::size_t n, std::size_t t, RngStream& rng) {
    if (n < 1 || t < 1) fail(ErrorKind::InvalidParams, "dimensions must be >= 1");
    if (row_boundary.size() != n || col_boundary.size() != t)
        fail(ErrorKind::InvalidParams, "boundary law count must match the dimensions");

    QuadrantField f;
    f.n_max = n;
    f.m_max = t;
    f.model = kernel(1, 1);
    f.X = Array2(n + 1, t + 1);  // X(i, s): state of site i at time s
    f.U = Array2(n + 1, t + 1);  // U(i, s): carrier from site i at time s (column 0 = boundary)
    bool any_vertex = false;

    RngStream master(rng.next_u64());
    RngStream srow = master.child(0), scol = master.child(1), sbulk = master.child(2);
    for (std::size_t i = 1; i <= n; ++i) f.X(i, 0) = Distribution(row_boundary[i - 1]).sample(srow);
    for (std::size_t s = 1; s <= t; ++s)
        f.U(0, s) = Distribution(col_boundary[s - 1]).sample(scol);

    // Pre-draw the driving variables so the fill itself is deterministic.
    f.drive = Array2(n + 1, t + 1);
    for (std::size_t s = 1; s <= t; ++s)
        for (std::size_t i = 1; i <= n; ++i) f.drive(i, s) = sbulk.uniform01();

    for (std::size_t s = 1; s <= t; ++s) {
        for (std::size_t i = 1; i <= n; ++i) {
            LocalMap km = kernel(i, s);
            Pair out;
            switch (km.family) {
                case MapFamily::udKdV:
                case MapFamily::dKdV:
                    out = eval_pair_map(km, f.X(i, s - 1), f.U(i - 1, s));
                    break;
                case MapFamily::R_HSV:
                    any_vertex = true;
                    out = quadrant_kernel(km, f.drive(i, s), f.X(i, s - 1), f.U(i - 1, s));
                    if (std::llround(out[0] + out[1]) !=
                        std::llround(f.X(i, s - 1) + f.U(i - 1, s)))
                        fail(ErrorKind::DomainError, "vertex conservation violated");
                    break;
                default:
                    fail(ErrorKind::UnsupportedFamily,
                         "inhomogeneous fill supports udKdV, dKdV, and R_HSV kernels");
            }
            f.X(i, s) = out[0];
            f.U(i, s) = out[1];
        }
    }
    if (!any_vertex) f.drive = Array2();
    return f;
}

}  // namespace ilat
