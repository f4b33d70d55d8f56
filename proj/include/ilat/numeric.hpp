#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>

#include "ilat/errors.hpp"

namespace ilat {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_finite(double x) { return std::isfinite(x); }

/// Adaptive Simpson quadrature on [a, b] with absolute tolerance `tol`.
template <typename F>
double integrate(F&& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
    struct Rec {
        const std::function<double(double)>& g;
        double operator()(double a, double b, double fa, double fm, double fb, double whole,
                          double tol, int depth) const {
            double m = 0.5 * (a + b);
            double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            double flm = g(lm), frm = g(rm);
            double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol) {
                return left + right + (left + right - whole) / 15.0;
            }
            return (*this)(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
                   (*this)(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        }
    };
    std::function<double(double)> g = std::forward<F>(f);
    double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return Rec{g}(a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Bisection for a sign change of f on [lo, hi]; f(lo) and f(hi) must differ in sign.
template <typename F>
double bisect(F&& f, double lo, double hi, double xtol = 1e-13, int max_iter = 200) {
    double flo = f(lo);
    for (int i = 0; i < max_iter && hi - lo > xtol * (1.0 + std::fabs(lo)); ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double log_sum_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

inline double sqr(double x) { return x * x; }

}  // namespace ilat
