#include "doctest.h"

#include <cmath>

#include "ilat/rng.hpp"

using namespace ilat;

TEST_CASE("same seed, same stream") {
    RngStream a(123), b(123);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("child streams are independent of parent position") {
    RngStream a(7);
    RngStream c0 = a.child(4);
    a.next_u64();
    a.next_u64();
    RngStream c1 = a.child(4);
    CHECK(c0.next_u64() == c1.next_u64());  // derivation ignores the parent counter

    RngStream d = RngStream(7).child(5);
    CHECK(RngStream(7).child(4).next_u64() != d.next_u64());
}

TEST_CASE("uniform01 lies strictly inside (0,1) with the right moments") {
    RngStream r(99);
    double lo = 1.0, hi = 0.0, mean = 0.0, var = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform01();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        mean += u;
        var += u * u;
    }
    mean /= n;
    var = var / n - mean * mean;
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal draws have unit variance") {
    RngStream r(1);
    double m = 0, s = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double z = r.normal();
        m += z;
        s += z * z;
    }
    m /= n;
    CHECK(std::fabs(m) < 0.01);
    CHECK(s / n == doctest::Approx(1.0).epsilon(0.02));
}
