#include "doctest.h"

#include <cmath>

#include "ilat/distributions.hpp"
#include "ilat/stats.hpp"
#include "test_support.hpp"

using namespace ilat;

namespace {

DistSpec stexp(double l, double c1, double c2) {
    return make_spec(DistFamily::stExp, {{"lambda", l}, {"c1", c1}, {"c2", c2}});
}
DistSpec sexp(double l, double c) { return make_spec(DistFamily::sExp, {{"lambda", l}, {"c", c}}); }
DistSpec gam(double l, double c) { return make_spec(DistFamily::Gam, {{"lambda", l}, {"c", c}}); }

}  // namespace

TEST_CASE("sample means of the shifted exponential families") {
    RngStream rng(11);
    auto u = sample(stexp(0.0, 0.0, 1.0), rng, 100000);
    CHECK(testsup::mean_of(u) == doctest::Approx(0.5).epsilon(0.02));  // lambda = 0 is uniform
    auto e = sample(sexp(2.0, 0.0), rng, 100000);
    CHECK(testsup::mean_of(e) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("GIG sampler against its numerically normalized density") {
    RngStream rng(12);
    DistSpec spec = make_spec(DistFamily::GIG, {{"lambda", 1.0}, {"c1", 1.0}, {"c2", 1.0}});
    Distribution d(spec);
    auto s = d.sample_n(rng, 100000);
    CHECK(chi2_gof_binned(s, d, 64).p_value > 0.01);
    // Normalizer oracle: test-side Simpson on (0, inf) through x = e^t.
    double z = testsup::simpson([&](double t) { return d.density(std::exp(t)) * std::exp(t); },
                                -12.0, 12.0);
    CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("density point values") {
    // sstbGeo(1-theta=0.5, M=0, N=2, kappa=1, m=1) at 0: Z = 1 + 0.5 + 0.25.
    Distribution g(make_spec(DistFamily::sstbGeo,
                             {{"theta", 0.5}, {"M", 0}, {"N", 2}, {"kappa", 1}, {"m", 1}}));
    CHECK(g.density(0.0) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
    Distribution al(make_spec(DistFamily::AL, {{"lambda1", 1.0}, {"lambda2", 1.0}}));
    CHECK(al.density(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    // qNB(b=0.5, p=0.5, q=0.5): pmf(0) = (b;q)_inf / (pb;q)_inf here (p = b).
    Distribution q(make_spec(DistFamily::qNB, {{"b", 0.5}, {"p", 0.5}, {"q", 0.5}}));
    double num = 1.0, den = 1.0, qk = 1.0;
    for (int k = 0; k < 200; ++k) {
        num *= 1.0 - 0.5 * qk;
        den *= 1.0 - 0.25 * qk;
        qk *= 0.5;
    }
    CHECK(q.density(0.0) == doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("exact pmf tables") {
    auto dirac = exact_pmf_table(make_spec(DistFamily::Dirac, {{"a", 3.0}}));
    REQUIRE(dirac.size() == 1);
    CHECK(dirac[0].first == 3.0);
    CHECK(dirac[0].second == 1.0);

    auto two = exact_pmf_table(make_spec(
        DistFamily::sstbGeo, {{"theta", 0.5}, {"M", 0}, {"N", 1}, {"kappa", 2}, {"m", 1}}));
    REQUIRE(two.size() == 2);
    CHECK(two[0].second == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(two[1].second == doctest::Approx(0.5).epsilon(1e-15));

    // qNB(q^{-1}, -q p0) is Bernoulli with odds p0.
    auto bern = exact_pmf_table(make_spec(DistFamily::qNB, {{"b", 2.0}, {"p", -0.5}, {"q", 0.5}}));
    REQUIRE(bern.size() == 2);
    CHECK(bern[0].second == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(bern[1].second == doctest::Approx(0.5).epsilon(1e-14));

    CHECK_THROWS_AS((void)exact_pmf_table(sexp(1.0, 0.0)), Error);
    CHECK_THROWS_AS((void)exact_pmf_table(make_spec(DistFamily::qNB,
                                                    {{"b", 0.5}, {"p", 0.5}, {"q", 0.5}})),
                    Error);
}

TEST_CASE("table probabilities sum to one") {
    auto t = exact_pmf_table(make_spec(
        DistFamily::sstbGeo, {{"theta", 1.3}, {"M", -2}, {"N", 5}, {"kappa", 0.7}, {"m", 0.5}}));
    double total = 0;
    for (auto& [x, p] : t) total += p;
    CHECK(std::fabs(total - 1.0) <= 1e-15);
}

TEST_CASE("densities integrate/sum to one (every continuous family)") {
    // Bounded supports integrate directly; positive supports go through
    // x = e^t, which also tames the x -> 0 singularity of small-shape gammas.
    std::vector<DistSpec> direct = {
        stexp(1.5, -1.0, 2.0),
        stexp(-0.8, 0.5, 3.0),
        sexp(0.7, -2.0),
        make_spec(DistFamily::AL, {{"lambda1", 1.2}, {"lambda2", 0.6}}),
        make_spec(DistFamily::Beta, {{"lambda1", 2.0}, {"lambda2", 3.0}}),
    };
    std::vector<DistSpec> positive = {
        gam(2.3, 1.7),
        gam(0.4, 1.0),
        make_spec(DistFamily::IG, {{"lambda", 1.1}, {"c", 2.0}}),
        make_spec(DistFamily::GIG, {{"lambda", -0.7}, {"c1", 0.9}, {"c2", 1.4}}),
    };
    for (const auto& spec : direct) {
        Distribution d(spec);
        double lo = d.support_min() == -kInf ? -80.0 : d.support_min();
        double hi = d.support_max() == kInf ? 80.0 : d.support_max();
        double z = testsup::simpson([&](double x) { return d.density(x); }, lo, hi, 200000);
        CHECK_MESSAGE(std::fabs(z - 1.0) < 1e-5, to_string(spec.family));
    }
    for (const auto& spec : positive) {
        Distribution d(spec);
        double z = testsup::simpson(
            [&](double t) { return d.density(std::exp(t)) * std::exp(t); }, -60.0, 60.0, 200000);
        CHECK_MESSAGE(std::fabs(z - 1.0) < 1e-5, to_string(spec.family));
    }
    // Discrete families: direct summation.
    std::vector<DistSpec> disc = {
        make_spec(DistFamily::sstbGeo,
                  {{"theta", 0.8}, {"M", -3}, {"N", kInf}, {"kappa", 2.5}, {"m", 2}}),
        make_spec(DistFamily::ssGeo, {{"theta", 0.6}, {"M", 1}, {"m", 1}}),
        make_spec(DistFamily::sdAL, {{"theta1", 0.5}, {"theta2", 0.3}, {"m", 1}}),
        make_spec(DistFamily::qNB, {{"b", 0.3}, {"p", 0.7}, {"q", 0.4}}),
    };
    for (const auto& spec : disc) {
        Distribution d(spec);
        double m = spec.family == DistFamily::qNB ? 1.0 : spec.param("m");
        double total = 0;
        for (int k = -300; k <= 2000; ++k) total += d.density(m * k);
        CHECK_MESSAGE(std::fabs(total - 1.0) < 1e-9, to_string(spec.family));
    }
}

TEST_CASE("empirical cdf vs analytic cdf for every family (KS bound 1.95/sqrt(n))") {
    std::vector<DistSpec> cases = {
        stexp(2.0, -1.0, 1.5),
        sexp(1.0, 3.0),
        make_spec(DistFamily::sstbGeo,
                  {{"theta", 0.7}, {"M", 0}, {"N", 6}, {"kappa", 1.8}, {"m", 1}}),
        make_spec(DistFamily::ssGeo, {{"theta", 0.45}, {"M", -1}, {"m", 2}}),
        make_spec(DistFamily::AL, {{"lambda1", 0.9}, {"lambda2", 2.1}}),
        make_spec(DistFamily::sdAL, {{"theta1", 0.35}, {"theta2", 0.65}, {"m", 1}}),
        gam(1.8, 0.9),
        gam(0.35, 2.0),
        make_spec(DistFamily::IG, {{"lambda", 2.5}, {"c", 1.0}}),
        make_spec(DistFamily::GIG, {{"lambda", 0.0}, {"c1", 0.5}, {"c2", 2.0}}),
        make_spec(DistFamily::GIG, {{"lambda", -2.0}, {"c1", 3.0}, {"c2", 0.2}}),
        make_spec(DistFamily::Beta, {{"lambda1", 0.7}, {"lambda2", 0.7}}),
        make_spec(DistFamily::qNB, {{"b", 0.2}, {"p", 0.55}, {"q", 0.3}}),
        make_spec(DistFamily::Uniform01, {}),
    };
    RngStream rng(2718);
    const std::size_t n = 100000;
    for (const auto& spec : cases) {
        Distribution d(spec);
        RngStream local = rng.child(static_cast<std::uint64_t>(&spec - cases.data()));
        auto s = d.sample_n(local, n);
        double ks = ks_one_sample(s, d).statistic;
        CHECK_MESSAGE(ks < 1.95 / std::sqrt(static_cast<double>(n)), to_string(spec.family));
    }
}

TEST_CASE("sstbGeo with kappa=1, M=0, N=inf, m=1 is the plain geometric") {
    Distribution d(make_spec(DistFamily::sstbGeo,
                             {{"theta", 0.37}, {"M", 0}, {"N", kInf}, {"kappa", 1}, {"m", 1}}));
    for (int k = 0; k <= 40; ++k) {
        double expect = (1.0 - 0.37) * std::pow(0.37, k);
        CHECK(d.density(k) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("GIG(lambda, 0, c) follows the inverse-gamma convention pointwise") {
    Distribution g(make_spec(DistFamily::GIG, {{"lambda", 1.4}, {"c1", 0.0}, {"c2", 2.2}}));
    Distribution ig(make_spec(DistFamily::IG, {{"lambda", 1.4}, {"c", 2.2}}));
    for (double x : {0.1, 0.5, 1.0, 2.0, 8.0}) {
        CHECK(g.density(x) == doctest::Approx(ig.density(x)).epsilon(1e-12));
        CHECK(g.cdf(x) == doctest::Approx(ig.cdf(x)).epsilon(1e-12));
    }
}

TEST_CASE("fusion: sums of two-point qNB laws match the fused qNB pmf") {
    // X = Y_1 + ... + Y_J with Y_i ~ qNB(q^{-1}, -q^i p) matches qNB(q^{-J}, -q^J p).
    const double q = 0.5, p = 0.5;
    const int J = 3;
    RngStream rng(5);
    std::vector<Distribution> ys;
    for (int i = 1; i <= J; ++i)
        ys.emplace_back(make_spec(DistFamily::qNB,
                                  {{"b", 1.0 / q}, {"p", -std::pow(q, i) * p}, {"q", q}}));
    Distribution fused(make_spec(DistFamily::qNB,
                                 {{"b", std::pow(q, -J)}, {"p", -std::pow(q, J) * p}, {"q", q}}));
    const std::size_t n = 100000;
    std::vector<double> sums(n, 0.0);
    for (auto& y : ys)
        for (std::size_t k = 0; k < n; ++k) sums[k] += y.sample(rng);
    CHECK(chi2_gof_discrete(sums, fused).p_value > 0.01);

    // Exact convolution agrees with the fused table.
    std::vector<double> conv = {1.0};
    for (auto& y : ys) {
        auto t = y.exact_pmf_table();
        std::vector<double> next(conv.size() + t.size(), 0.0);
        for (std::size_t a = 0; a < conv.size(); ++a)
            for (auto& [x, pr] : t) next[a + static_cast<std::size_t>(x)] += conv[a] * pr;
        conv = next;
    }
    auto ft = fused.exact_pmf_table();
    for (auto& [x, pr] : ft)
        CHECK(conv[static_cast<std::size_t>(x)] == doctest::Approx(pr).epsilon(1e-12));
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(Distribution(stexp(1.0, 2.0, 1.0)), Error);         // c1 >= c2
    CHECK_THROWS_AS(Distribution(stexp(-1.0, 0.0, kInf)), Error);       // lambda <= 0, c2 = inf
    CHECK_THROWS_AS(Distribution(sexp(0.0, 0.0)), Error);               // lambda <= 0
    CHECK_THROWS_AS(Distribution(gam(0.0, 1.0)), Error);                // shape <= 0
    CHECK_THROWS_AS(Distribution(make_spec(DistFamily::sstbGeo,
                                           {{"theta", 1.2}, {"M", 0}, {"N", kInf},
                                            {"kappa", 1}, {"m", 1}})),
                    Error);                                             // theta >= 1 with N = inf
    CHECK_THROWS_AS(Distribution(make_spec(DistFamily::qNB,
                                           {{"b", 0.4}, {"p", -0.5}, {"q", 0.5}})),
                    Error);                                             // p < 0 needs b = q^-L
    CHECK_THROWS_AS(Distribution(make_spec(DistFamily::GIG,
                                           {{"lambda", -1.0}, {"c1", 0.0}, {"c2", 1.0}})),
                    Error);                                             // c1 = 0 needs lambda > 0
}

TEST_CASE("theta = 1 with finite support gives kappa-parity weights") {
    Distribution d(make_spec(DistFamily::sstbGeo,
                             {{"theta", 1.0}, {"M", 0}, {"N", 3}, {"kappa", 3.0}, {"m", 1}}));
    // Weights 1,3,1,3 over {0,1,2,3}.
    CHECK(d.density(0) == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
    CHECK(d.density(1) == doctest::Approx(3.0 / 8.0).epsilon(1e-12));
    RngStream rng(3);
    auto s = d.sample_n(rng, 50000);
    CHECK(chi2_gof_discrete(s, d).p_value > 0.001);
}

TEST_CASE("deterministic resampling: same spec and seed give identical draws") {
    DistSpec spec = make_spec(DistFamily::GIG, {{"lambda", 0.5}, {"c1", 1.0}, {"c2", 1.0}});
    RngStream a(77), b(77);
    auto s1 = sample(spec, a, 64);
    auto s2 = sample(spec, b, 64);
    CHECK(s1 == s2);
}
