#pragma once

#include <cmath>
#include <functional>
#include <vector>

// Test-side numerics, kept independent of the library's quadrature so the
// normalization checks have their own oracle.
namespace testsup {

inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 4096) {
    if (n % 2) ++n;
    double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

inline double mean_of(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    return m / static_cast<double>(v.size());
}

}  // namespace testsup
