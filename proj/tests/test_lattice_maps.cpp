#include "doctest.h"

#include <cmath>

#include "ilat/lattice_maps.hpp"
#include "ilat/rng.hpp"

using namespace ilat;

namespace {

double dyadic(RngStream& rng) {
    // Multiples of 2^-10 in [-32, 32]: closed under the max-plus maps without rounding.
    return (static_cast<double>(rng.below(65537)) - 32768.0) / 1024.0;
}

LocalMap udkdv(double J, double K) { return make_map(MapFamily::udKdV, {{"J", J}, {"K", K}}); }
LocalMap dkdv(double a, double b) { return make_map(MapFamily::dKdV, {{"alpha", a}, {"beta", b}}); }

}  // namespace

TEST_CASE("udKdV point examples") {
    auto swap = udkdv_map(5, 5, 1.2, 3.4);
    CHECK(swap[0] == 3.4);  // J = K swaps the arguments
    CHECK(swap[1] == 1.2);
    auto id = udkdv_map(1, 2, 0.5, 0.8);
    CHECK(id[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(id[1] == doctest::Approx(0.8).epsilon(1e-15));
    auto inf = udkdv_map(1, kInf, 0.7, 0.9);
    CHECK(inf[0] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(inf[1] == doctest::Approx(1.3).epsilon(1e-14));
}

TEST_CASE("dKdV point examples and conserved quantities") {
    auto swap = dkdv_map(2, 2, 0.3, 1.1);
    CHECK(swap[0] == doctest::Approx(1.1).epsilon(1e-14));
    CHECK(swap[1] == doctest::Approx(0.3).epsilon(1e-14));
    auto a = dkdv_map(1, 0, 1, 1);
    CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(a[1] == doctest::Approx(2.0).epsilon(1e-14));
    auto b = dkdv_map(0, 1, 1, 1);
    CHECK(b[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(b[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(dkdv_map(1, 0, -1, 1), Error);
}

TEST_CASE("star maps and their inverses") {
    auto s = udtoda_star(3, 5);
    CHECK(s[0] == 3);
    CHECK(s[1] == -2);
    auto sa = udtoda_star(7.25, 7.25);
    CHECK(sa[0] == 7.25);
    CHECK(sa[1] == 0);
    auto r = udtoda_star_inv(3, -2);
    CHECK(r[0] == 3);
    CHECK(r[1] == 5);

    auto d = dtoda_star(1, 1);
    CHECK(d[0] == 2);
    CHECK(d[1] == 0.5);
    auto d2 = dtoda_star(1, 3);
    CHECK(d2[0] == 4);
    CHECK(d2[1] == 0.25);
    auto di = dtoda_star_inv(2, 0.5);
    CHECK(di[0] == 1);
    CHECK(di[1] == 1);
    CHECK_THROWS_AS(dtoda_star_inv(2, 1.5), Error);
}

TEST_CASE("three-point maps: examples, fixed points, involution") {
    auto u = udtoda_map(2, 1, 3);
    CHECK(u == Triple{1, 2, 4});
    CHECK(udtoda_map(1, 2, 4) == Triple{2, 1, 3});
    CHECK(udtoda_map(0, 5, 0) == Triple{0, 5, 0});

    auto t = dtoda_map(2, 3, 1);
    CHECK(t[0] == doctest::Approx(4.0));
    CHECK(t[1] == doctest::Approx(1.5));
    CHECK(t[2] == doctest::Approx(0.5));
    auto back = dtoda_map(t[0], t[1], t[2]);
    CHECK(back[0] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(back[1] == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(back[2] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(dtoda_map(2, 1, 1) == Triple{2, 1, 1});
}

TEST_CASE("three_point_involution reproduces the direct maps") {
    ThreePointMap udt = three_point_involution(make_map(MapFamily::udTodaStar, {}));
    CHECK(udt({2, 1, 3}) == Triple{1, 2, 4});
    ThreePointMap dt = three_point_involution(make_map(MapFamily::dTodaStar, {}));
    auto v = dt({2, 3, 1});
    CHECK(v[0] == doctest::Approx(4.0));
    CHECK(v[1] == doctest::Approx(1.5));
    CHECK(v[2] == doctest::Approx(0.5));

    RngStream rng(41);
    for (int i = 0; i < 1000; ++i) {
        Triple in = {dyadic(rng), dyadic(rng), dyadic(rng)};
        Triple once = udt(in);
        Triple twice = udt(once);
        CHECK(twice == in);  // exact on dyadics
        CHECK(once == udtoda_map(in[0], in[1], in[2]));
    }
    CHECK_THROWS_AS(three_point_involution(udkdv(1, 2)), Error);
}

TEST_CASE("involution and conservation sweeps") {
    RngStream rng(17);
    for (int draw = 0; draw < 20; ++draw) {
        double J = dyadic(rng), K = dyadic(rng);
        if (draw % 5 == 0) K = kInf;
        for (int i = 0; i < 500; ++i) {
            double x = dyadic(rng), u = dyadic(rng);
            Pair once = udkdv_map(J, K, x, u);
            Pair twice = udkdv_map(J, K, once[0], once[1]);
            CHECK(twice[0] == x);
            CHECK(twice[1] == u);
            CHECK(once[0] + once[1] == x + u);  // exact on dyadics
        }
        double a = std::exp(rng.uniform(-2, 1)), b = std::exp(rng.uniform(-2, 1));
        if (draw % 4 == 0) b = 0.0;
        for (int i = 0; i < 500; ++i) {
            double x = std::exp(rng.uniform(-2, 2)), u = std::exp(rng.uniform(-2, 2));
            Pair once = dkdv_map(a, b, x, u);
            Pair twice = dkdv_map(a, b, once[0], once[1]);
            CHECK(std::fabs(twice[0] - x) <= 1e-12 * std::fabs(x));
            CHECK(std::fabs(twice[1] - u) <= 1e-12 * std::fabs(u));
            CHECK(std::fabs(once[0] * once[1] - x * u) <= 1e-12 * std::fabs(x * u));
            double before = a * x + 1 / x + b * u + 1 / u;
            double after = a * once[0] + 1 / once[0] + b * once[1] + 1 / once[1];
            CHECK(std::fabs(after - before) <= 1e-12 * std::fabs(before));
        }
    }
    // K_udT involution, exact.
    RngStream rng2(18);
    for (int i = 0; i < 2000; ++i) {
        double x = dyadic(rng2), u = dyadic(rng2);
        Pair once = k_udt(x, u);
        Pair twice = k_udt(once[0], once[1]);
        CHECK(twice[0] == x);
        CHECK(twice[1] == u);
    }
    // K_dT involution, relative.
    for (int i = 0; i < 2000; ++i) {
        double x = std::exp(rng2.uniform(-2, 2)), u = std::exp(rng2.uniform(-2, 2));
        Pair once = k_dt(x, u);
        Pair twice = k_dt(once[0], once[1]);
        CHECK(std::fabs(twice[0] - x) <= 1e-12 * x);
        CHECK(std::fabs(twice[1] - u) <= 1e-12 * u);
    }
}

TEST_CASE("udToda exact pairwise identities") {
    // Tropical analogue of the dToda identities: out0 + out1 = a + b and
    // out0 + out2 = a + c hold exactly.
    RngStream rng(19);
    for (int i = 0; i < 2000; ++i) {
        double a = dyadic(rng), b = dyadic(rng), c = dyadic(rng);
        Triple out = udtoda_map(a, b, c);
        CHECK(out[0] + out[1] == a + b);
        CHECK(out[0] + out[2] == a + c);
        CHECK(out[0] == std::min(b, c));
    }
}

TEST_CASE("dToda exact identities") {
    RngStream rng(20);
    for (int i = 0; i < 2000; ++i) {
        double a = std::exp(rng.uniform(-2, 2)), b = std::exp(rng.uniform(-2, 2)),
               c = std::exp(rng.uniform(-2, 2));
        Triple out = dtoda_map(a, b, c);
        CHECK(out[0] == b + c);  // computed literally
        CHECK(std::fabs(out[0] * out[1] - a * b) <= 1e-12 * a * b);
        CHECK(std::fabs(out[0] * out[2] - a * c) <= 1e-12 * a * c);
    }
}

TEST_CASE("dKdV Jacobian determinant has modulus one") {
    RngStream rng(21);
    const double h = 1e-5;
    for (int i = 0; i < 1000; ++i) {
        double a = std::exp(rng.uniform(-1, 1)), b = std::exp(rng.uniform(-1, 1));
        double x = std::exp(rng.uniform(-1, 1)), u = std::exp(rng.uniform(-1, 1));
        auto f = [&](double xx, double uu) { return dkdv_map(a, b, xx, uu); };
        double dy_dx = (f(x + h, u)[0] - f(x - h, u)[0]) / (2 * h);
        double dy_du = (f(x, u + h)[0] - f(x, u - h)[0]) / (2 * h);
        double dv_dx = (f(x + h, u)[1] - f(x - h, u)[1]) / (2 * h);
        double dv_du = (f(x, u + h)[1] - f(x, u - h)[1]) / (2 * h);
        double det = dy_dx * dv_du - dy_du * dv_dx;
        CHECK(std::fabs(std::fabs(det) - 1.0) < 1e-5);
    }
}

TEST_CASE("dual map swaps parameters and equals pi F pi") {
    LocalMap m = udkdv(1, 3);
    LocalMap d = dual_map(m);
    CHECK(d.param("J") == 3);
    CHECK(d.param("K") == 1);
    RngStream rng(22);
    for (int i = 0; i < 1000; ++i) {
        double x = dyadic(rng), u = dyadic(rng);
        Pair lhs = eval_pair_map(d, x, u);
        Pair swapped = eval_pair_map(m, u, x);
        CHECK(lhs[0] == swapped[1]);  // pi . F . pi
        CHECK(lhs[1] == swapped[0]);
        Pair dd = eval_pair_map(dual_map(d), x, u);
        CHECK(dd == eval_pair_map(m, x, u));
    }
    LocalMap dk = dual_map(dkdv(1, 0));
    Pair v = eval_pair_map(dk, 1.0, 1.0);
    CHECK(v[0] == doctest::Approx(2.0));
    CHECK(v[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(dual_map(make_map(MapFamily::udToda, {})), Error);
}

TEST_CASE("symmetry conjugations") {
    LocalMap m = udkdv(1, 2);
    Pair plain = eval_pair_map(m, 0.5, 0.8);
    Pair shifted = apply_symmetry(m, {SymmetryKind::shift, 0.0}, 0.5, 0.8);
    CHECK(shifted == plain);
    RngStream rng(23);
    for (int i = 0; i < 500; ++i) {
        double x = dyadic(rng), u = dyadic(rng), r = dyadic(rng);
        Pair lhs = apply_symmetry(m, {SymmetryKind::shift, r}, x, u);
        Pair rhs = eval_pair_map(m, x, u);
        CHECK(std::fabs(lhs[0] - rhs[0]) <= 1e-12);
        CHECK(std::fabs(lhs[1] - rhs[1]) <= 1e-12);
    }
    Pair scaled = apply_symmetry(m, {SymmetryKind::scale, 2.0}, 0.5, 0.8);
    CHECK(scaled[0] == doctest::Approx(2 * plain[0]).epsilon(1e-14));
    CHECK(scaled[1] == doctest::Approx(2 * plain[1]).epsilon(1e-14));
    Pair sp = apply_symmetry(m, {SymmetryKind::space_particle, 0.0}, 0.5, 0.8);
    CHECK(sp[0] == doctest::Approx(plain[0]).epsilon(1e-14));
    CHECK(sp[1] == doctest::Approx(plain[1]).epsilon(1e-14));

    LocalMap dk = dkdv(0.7, 1.3);
    Pair dplain = eval_pair_map(dk, 0.9, 1.4);
    Pair dscale = apply_symmetry(dk, {SymmetryKind::scale, 3.0}, 0.9, 1.4);
    CHECK(dscale[0] == doctest::Approx(3 * dplain[0]).epsilon(1e-12));
    Pair dsp = apply_symmetry(dk, {SymmetryKind::space_particle, 0.0}, 0.9, 1.4);
    CHECK(dsp[0] == doctest::Approx(dplain[0]).epsilon(1e-12));
    CHECK(dsp[1] == doctest::Approx(dplain[1]).epsilon(1e-12));

    CHECK_THROWS_AS(apply_symmetry(udkdv(1, kInf), {SymmetryKind::shift, 1.0}, 0, 0), Error);
    CHECK_THROWS_AS(apply_symmetry(udkdv(1, kInf), {SymmetryKind::space_particle, 0.0}, 0, 0),
                    Error);
    CHECK_THROWS_AS(apply_symmetry(dkdv(1, 0), {SymmetryKind::space_particle, 0.0}, 1, 1), Error);
}

TEST_CASE("quadrant kernels: point examples and projections") {
    CHECK(quadrant_kernel(make_map(MapFamily::R_DLPP, {}), 1, 2, 3) == Pair{1, 2});
    CHECK(quadrant_kernel(make_map(MapFamily::R_RPs, {}), 2, 1, 1) == Pair{1, 1});

    LocalMap hsv = make_map(MapFamily::R_HSV, {{"alpha_v", 1}, {"nu_v", 0}, {"q", 0}});
    CHECK(hsv_threshold(1, 0, 0, 1, 0) == doctest::Approx(0.5));
    CHECK(quadrant_kernel(hsv, 0.3, 1, 0) == Pair{1, 0});
    CHECK(quadrant_kernel(hsv, 0.7, 1, 0) == Pair{0, 1});
    CHECK_THROWS_AS(quadrant_kernel(hsv, 0.5, 1, 2), Error);
    CHECK_THROWS_AS(quadrant_kernel(make_map(MapFamily::R_RPs, {}), 1, -1, 1), Error);

    // R_DLPP equals components 2,3 of the udToda involution.
    RngStream rng(24);
    for (int i = 0; i < 1000; ++i) {
        double a = dyadic(rng), b = dyadic(rng), c = dyadic(rng);
        Triple full = udtoda_map(a, b, c);
        Pair proj = quadrant_kernel(make_map(MapFamily::R_DLPP, {}), a, b, c);
        CHECK(proj[0] == full[1]);
        CHECK(proj[1] == full[2]);
        double pa = std::exp(rng.uniform(-2, 2)), pb = std::exp(rng.uniform(-2, 2)),
               pc = std::exp(rng.uniform(-2, 2));
        Triple dfull = dtoda_map(pa, pb, pc);
        Pair dproj = quadrant_kernel(make_map(MapFamily::R_RPs, {}), pa, pb, pc);
        CHECK(dproj[0] == doctest::Approx(dfull[1]).epsilon(1e-14));
        CHECK(dproj[1] == doctest::Approx(dfull[2]).epsilon(1e-14));
    }
}

TEST_CASE("edge-polymer kernel matches the partition-ratio recursion") {
    LocalMap rpe = make_map(MapFamily::R_RPe, {{"A", -1.0}, {"B", 1.0}});  // h(x) = 1 - x
    Pair out = quadrant_kernel(rpe, 0.25, 2.0, 4.0);
    CHECK(out[0] == doctest::Approx(0.25 + 0.75 * 2.0 / 4.0));
    CHECK(out[1] == doctest::Approx(0.75 + 0.25 * 4.0 / 2.0));
}

TEST_CASE("conjugation identities on random points") {
    RngStream rng(25);
    double worst_ud = 0, worst_d = 0;
    for (int i = 0; i < 10000; ++i) {
        double J = 1.25;
        double x = dyadic(rng), u = dyadic(rng);
        Pair direct = udkdv_map(J, kInf, x, u);
        Pair conj = udkdv_via_k_udt(J, x, u);
        worst_ud = std::max({worst_ud, std::fabs(direct[0] - conj[0]),
                             std::fabs(direct[1] - conj[1])});
        double alpha = 0.8;
        double px = std::exp(rng.uniform(-2, 2)), pu = std::exp(rng.uniform(-2, 2));
        Pair d1 = dkdv_map(alpha, 0, px, pu);
        Pair d2 = dkdv_via_k_dt(alpha, px, pu);
        worst_d = std::max({worst_d, std::fabs(d1[0] - d2[0]) / std::max(1.0, std::fabs(d1[0])),
                            std::fabs(d1[1] - d2[1]) / std::max(1.0, std::fabs(d1[1]))});
    }
    CHECK(worst_ud <= 1e-12);
    CHECK(worst_d <= 1e-12);
    // J = 0 degenerate case: the change of coordinates is a pure sign flip.
    Pair z = udkdv_via_k_udt(0.0, 0.4, -0.3);
    Pair zd = udkdv_map(0.0, kInf, 0.4, -0.3);
    CHECK(z == zd);
}

TEST_CASE("map JSON round trip with infinities") {
    LocalMap m = udkdv(2, kInf);
    LocalMap back = LocalMap::from_json_string(m.to_json_string());
    CHECK(back == m);
    CHECK(back.param("K") == kInf);
}
