// Acceptance suite: ten end-to-end criteria with pinned tolerances, one
// pass/fail line each. Exit code 0 only if every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ilat/carrier_solver.hpp"
#include "ilat/distributions.hpp"
#include "ilat/lattice_maps.hpp"
#include "ilat/stats.hpp"
#include "ilat/stochastic_lattice.hpp"
#include "ilat/verification.hpp"

using namespace ilat;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int index, const char* label, bool ok, double seconds, double budget,
            const std::string& note) {
    bool in_budget = seconds < budget;
    bool pass = ok && in_budget;
    if (!pass) ++g_failures;
    std::printf("[criterion %02d] %s  %-34s (%.2fs / %.0fs)  %s\n", index,
                pass ? "PASS" : "FAIL", label, seconds, budget, note.c_str());
    if (!in_budget) std::printf("              runtime budget exceeded\n");
    std::fflush(stdout);
}

double dyadic(RngStream& rng, double scale = 16.0) {
    return (static_cast<double>(rng.below(1 << 21)) - static_cast<double>(1 << 20)) /
           std::exp2(20) * scale;
}

DistSpec stexp(double l, double c1, double c2) {
    return make_spec(DistFamily::stExp, {{"lambda", l}, {"c1", c1}, {"c2", c2}});
}
DistSpec sexp(double l, double c) { return make_spec(DistFamily::sExp, {{"lambda", l}, {"c", c}}); }
DistSpec gam(double l, double c) { return make_spec(DistFamily::Gam, {{"lambda", l}, {"c", c}}); }
DistSpec gig(double l, double c1, double c2) {
    return make_spec(DistFamily::GIG, {{"lambda", l}, {"c1", c1}, {"c2", c2}});
}
DistSpec ig(double l, double c) { return make_spec(DistFamily::IG, {{"lambda", l}, {"c", c}}); }
DistSpec sstb(double theta, double M, double N, double kappa, double m) {
    return make_spec(DistFamily::sstbGeo,
                     {{"theta", theta}, {"M", M}, {"N", N}, {"kappa", kappa}, {"m", m}});
}
LocalMap udkdv(double J, double K) { return make_map(MapFamily::udKdV, {{"J", J}, {"K", K}}); }
LocalMap dkdv(double a, double b) { return make_map(MapFamily::dKdV, {{"alpha", a}, {"beta", b}}); }

// --- criterion 1: involution and conservation --------------------------------

void criterion_involution() {
    Timer timer;
    RngStream rng(101);
    bool ok = true;
    double worst_rel = 0.0;
    for (int draw = 0; draw < 20 && ok; ++draw) {
        double J = dyadic(rng, 8), K = draw % 5 == 0 ? kInf : dyadic(rng, 8);
        double a = std::exp(rng.uniform(-2, 1)), b = draw % 4 == 0 ? 0.0 : std::exp(rng.uniform(-2, 1));
        for (int i = 0; i < 10000; ++i) {
            // Max-plus maps: exact on dyadic inputs.
            double x = dyadic(rng), u = dyadic(rng);
            Pair p1 = udkdv_map(J, K, x, u);
            Pair p2 = udkdv_map(J, K, p1[0], p1[1]);
            ok = ok && p2[0] == x && p2[1] == u && p1[0] + p1[1] == x + u;
            Triple t = {dyadic(rng), dyadic(rng), dyadic(rng)};
            Triple t1 = udtoda_map(t[0], t[1], t[2]);
            Triple t2 = udtoda_map(t1[0], t1[1], t1[2]);
            ok = ok && t2 == t && t1[0] + t1[1] == t[0] + t[1] && t1[0] + t1[2] == t[0] + t[2];
            Pair k1 = k_udt(x, u);
            Pair k2 = k_udt(k1[0], k1[1]);
            ok = ok && k2[0] == x && k2[1] == u;

            // Rational maps: relative 1e-12.
            double px = std::exp(rng.uniform(-2, 2)), pu = std::exp(rng.uniform(-2, 2));
            Pair d1 = dkdv_map(a, b, px, pu);
            Pair d2 = dkdv_map(a, b, d1[0], d1[1]);
            auto rel = [](double got, double want) {
                return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
            };
            worst_rel = std::max({worst_rel, rel(d2[0], px), rel(d2[1], pu),
                                  rel(d1[0] * d1[1], px * pu)});
            double inv_before = a * px + 1 / px + b * pu + 1 / pu;
            double inv_after = a * d1[0] + 1 / d1[0] + b * d1[1] + 1 / d1[1];
            worst_rel = std::max(worst_rel, rel(inv_after, inv_before));

            double qa = std::exp(rng.uniform(-2, 2)), qb = std::exp(rng.uniform(-2, 2)),
                   qc = std::exp(rng.uniform(-2, 2));
            Triple s1 = dtoda_map(qa, qb, qc);
            Triple s2 = dtoda_map(s1[0], s1[1], s1[2]);
            worst_rel = std::max({worst_rel, rel(s2[0], qa), rel(s2[1], qb), rel(s2[2], qc),
                                  rel(s1[0] * s1[1], qa * qb), rel(s1[0] * s1[2], qa * qc)});
            Pair g1 = k_dt(px, pu);
            Pair g2 = k_dt(g1[0], g1[1]);
            worst_rel = std::max({worst_rel, rel(g2[0], px), rel(g2[1], pu)});
        }
    }
    ok = ok && worst_rel < 1e-12;
    report(1, "involution & conservation", ok, timer.seconds(), 1.0,
           "worst relative error " + std::to_string(worst_rel));
}

// --- criterion 2: exact discrete detailed balance ----------------------------

void criterion_exact_detailed_balance() {
    Timer timer;
    RngStream rng(102);
    bool ok = true;
    double worst_tv = 0.0, worst_power = 1.0;
    for (int draw = 0; draw < 10; ++draw) {
        int fam = draw % 4;
        double J, K, theta, kappa;
        if (fam == 0 || fam == 2) {
            J = 1 + static_cast<double>(rng.below(3));       // 1..3
            K = J + 1 + static_cast<double>(rng.below(6 - static_cast<std::uint64_t>(J)));
            kappa = 1.0;
        } else {
            J = 2 + 2 * static_cast<double>(rng.below(2));   // 2 or 4
            K = J + 2;
            kappa = 0.5 + rng.uniform01();                   // != 1 almost surely
        }
        theta = fam < 2 ? rng.uniform(0.3, 0.8) : rng.uniform(1.0, 1.4);
        RngStream unused(0);
        TestReport r = check_detailed_balance(udkdv(J, K), sstb(theta, 0, J, kappa, 1),
                                              sstb(theta, 0, K, kappa, 1), 0, unused);
        worst_tv = std::max(worst_tv, r.statistic);
        ok = ok && r.pass && r.statistic <= 1e-14;
        TestReport power = check_detailed_balance(udkdv(J, K), sstb(theta + 0.1, 0, J, kappa, 1),
                                                  sstb(theta, 0, K, kappa, 1), 0, unused);
        worst_power = std::min(worst_power, power.statistic);
        ok = ok && power.statistic >= 0.01;
    }
    report(2, "exact discrete detailed balance", ok, timer.seconds(), 1.0,
           "max TV " + std::to_string(worst_tv) + ", min perturbed TV " +
               std::to_string(worst_power));
}

// --- criterion 3: continuous detailed balance --------------------------------

void criterion_continuous_detailed_balance() {
    Timer timer;
    RngStream rng(103);
    const std::size_t n = 100000;
    bool ok = true;
    std::string note;
    auto run2 = [&](const char* tag, const LocalMap& m, const DistSpec& mu, const DistSpec& nu) {
        TestReport r = check_detailed_balance(m, mu, nu, n, rng);
        ok = ok && r.pass;
        if (!r.pass) note += std::string(tag) + " failed; ";
    };
    run2("udKdV+stExp", udkdv(2, 4), stexp(1, 0, 2), stexp(1, 0, 4));
    run2("dKdV+GIG/IG", dkdv(1, 0), gig(1, 1, 1), ig(1, 1));
    auto run4 = [&](const char* tag, const LocalMap& star, const DistSpec& mu, const DistSpec& nu,
                    const DistSpec& mt, const DistSpec& nt) {
        TestReport r = check_detailed_balance_star(star, mu, nu, mt, nt, n, rng);
        ok = ok && r.pass;
        if (!r.pass) note += std::string(tag) + " failed; ";
    };
    run4("udTodaStar+sExp", make_map(MapFamily::udTodaStar, {}), sexp(1, 0), sexp(2, 0),
         sexp(3, 0), make_spec(DistFamily::AL, {{"lambda1", 1}, {"lambda2", 2}}));
    auto ssgeo = [](double theta) {
        return make_spec(DistFamily::ssGeo, {{"theta", theta}, {"M", 0}, {"m", 1}});
    };
    run4("udTodaStar+ssGeo", make_map(MapFamily::udTodaStar, {}), ssgeo(0.5), ssgeo(0.5),
         ssgeo(0.25), make_spec(DistFamily::sdAL, {{"theta1", 0.5}, {"theta2", 0.5}, {"m", 1}}));
    run4("dTodaStar+Gam", make_map(MapFamily::dTodaStar, {}), gam(1, 1), gam(2, 1), gam(3, 1),
         make_spec(DistFamily::Beta, {{"lambda1", 1}, {"lambda2", 2}}));
    report(3, "continuous detailed balance", ok, timer.seconds(), 10.0,
           note.empty() ? "5 families at alpha=0.01, n=1e5" : note);
}

// --- criterion 4: invariance under the one-step operator ---------------------

void criterion_invariance() {
    Timer timer;
    RngStream rng(1043);
    const std::size_t W = 4096, M = 512, F = 32;
    bool ok = true;
    std::string note;
    auto run = [&](const char* tag, const LocalMap& m, const DistSpec& mu,
                   std::optional<DistSpec> mu_tilde) {
        TestReport r = check_invariance(m, mu, mu_tilde, W, M, F, rng);
        ok = ok && r.pass;
        if (!r.pass) note += std::string(tag) + " failed; ";
    };
    run("udKdV(1,inf)+stExp", udkdv(1, kInf), stexp(2, 0, 1), std::nullopt);
    run("udKdV(1,3)+stExp", udkdv(1, 3), stexp(1, 0, 1), std::nullopt);
    run("udKdV(1,2)+sstbGeo", udkdv(1, 2), sstb(0.4, 0, 1, 1, 1), std::nullopt);
    run("dKdV(a,0)+GIG", dkdv(std::exp(-4.0), 0), gig(1, std::exp(-4.0), 1), std::nullopt);
    run("dKdV(0,b)+IG", dkdv(0, std::exp(-4.0)), ig(1, 1), std::nullopt);
    run("udToda+sExp", make_map(MapFamily::udToda, {}), sexp(1, 0), sexp(3, 0));
    run("dToda+Gam", make_map(MapFamily::dToda, {}), gam(1, 1), gam(3, 1));
    report(4, "invariance of product measures", ok, timer.seconds(), 60.0,
           note.empty() ? "7 families, window 4096, margin 512, 32 fields" : note);
}

// --- criterion 5: Burke's property --------------------------------------------

void criterion_burke() {
    Timer timer;
    RngStream rng(105);
    bool ok = true;
    std::string note;

    // The exact two-state carrier fixed point must coincide with the
    // geometric law before it is used as the boundary input.
    double p = 0.3, theta = p / (1 - p);
    PmfTable fixed = carrier_fixed_point_two_state(udkdv(1, kInf), p, 64);
    for (const auto& [u, pr] : fixed) {
        if (std::fabs(pr - (1 - theta) * std::pow(theta, u)) > 1e-10) {
            ok = false;
            note += "carrier fixed point mismatch; ";
            break;
        }
    }
    TestReport bbs = check_burke(udkdv(1, kInf), sstb(theta, 0, 1, 1, 1),
                                 make_spec(DistFamily::ssGeo, {{"theta", theta}, {"M", 0}, {"m", 1}}),
                                 512, 512, rng);
    ok = ok && bbs.pass;
    if (!bbs.pass) note += "BBS(1,inf) failed; ";
    TestReport toda = check_burke(make_map(MapFamily::udToda, {}), sexp(1, 0), sexp(2, 0), 512,
                                  512, rng);
    ok = ok && toda.pass;
    if (!toda.pass) note += "udToda failed; ";
    report(5, "Burke's property", ok, timer.seconds(), 30.0,
           note.empty() ? "BBS + udToda, 512x512, lags 1..4 within 3/sqrt(T)" : note);
}

// --- criterion 6: reconstruction from the carrier column ----------------------

void criterion_reconstruction() {
    Timer timer;
    RngStream rng(106);
    TestReport a = check_ergodicity_reconstruction(udkdv(1, kInf), stexp(2, 0, 1), sexp(2, 0),
                                                   2200, 32, rng, 100);
    TestReport b = check_ergodicity_reconstruction(dkdv(std::exp(-4.0), 0),
                                                   gig(1, std::exp(-4.0), 1), ig(1, 1), 3200, 32,
                                                   rng, 100);
    bool ok = a.pass && b.pass;
    report(6, "ergodicity: carrier reconstruction", ok, timer.seconds(), 30.0,
           "fractions " + std::to_string(a.details.at("fraction_reconstructed")) + " / " +
               std::to_string(b.details.at("fraction_reconstructed")));
}

// --- criterion 7: ultra-discretization ----------------------------------------

void criterion_ultradiscretization() {
    Timer timer;
    RngStream rng(107);
    const std::vector<double> eps = {0.2, 0.1, 0.05};
    UdParams pg;
    pg.lambda = 0.5;
    pg.c = 0.0;
    TestReport a = check_ultradiscretization(UdTarget::sExp_from_Gam, pg, eps, 100000, rng);
    UdParams pq;
    pq.lambda = 0.5;
    pq.c = -1.0;
    pq.L = 2.0;
    TestReport b = check_ultradiscretization(UdTarget::stExp_from_GIG, pq, eps, 100000, rng);
    bool ok = a.pass && b.pass;
    char note[128];
    std::snprintf(note, sizeof note, "final KS %.4f (Gam) / %.4f (GIG), bound 0.02",
                  a.details.at("ks_eps_2"), b.details.at("ks_eps_2"));
    report(7, "ultra-discretization limits", ok, timer.seconds(), 10.0, note);
}

// --- criterion 8: KdV-Toda correspondence --------------------------------------

void criterion_correspondence() {
    Timer timer;
    RngStream rng(108);
    const std::vector<double> eps = {0.1, 0.05, 0.02};
    CorrespondenceParams pu;
    pu.lambda1 = 1.0;
    pu.lambda2 = 1.0;
    pu.c = -1.0;
    pu.J = 1.0;
    TestReport a = check_correspondence(CorrespondenceSide::ultra, pu, 10000, eps, rng);
    CorrespondenceParams pd;
    pd.lambda1 = 1.0;
    pd.lambda2 = 1.0;
    pd.c = 1.0;
    pd.alpha = 1.0;
    TestReport b = check_correspondence(CorrespondenceSide::discrete, pd, 10000, eps, rng);
    bool ok = a.pass && b.pass;
    char note[160];
    std::snprintf(note, sizeof note,
                  "conj err %.1e / %.1e; final KS %.4f / %.4f (bound 0.03)",
                  a.details.at("conjugation_max_err"), b.details.at("conjugation_max_err"),
                  a.details.at("final_ks_b"), b.details.at("final_ks_b"));
    report(8, "KdV-Toda correspondence", ok, timer.seconds(), 60.0, note);
}

// --- criterion 9: stochastic quadrant models ------------------------------------

void criterion_quadrant() {
    Timer timer;
    RngStream rng(109);
    bool ok = true;
    std::string note;

    // Exact oracle agreement on 100 small instances.
    for (int rep = 0; rep < 100; ++rep) {
        std::size_t n = 2 + rng.below(5), m = 2 + rng.below(5);
        Array2 w(n, m);
        for (auto& v : w.data) v = std::floor(rng.uniform(0, 50));
        Array2 brute = dlpp_bruteforce(w), rec = dlpp_recursion(w);
        for (std::size_t i = 0; i < n && ok; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (brute(i, j) != rec(i, j)) {
                    ok = false;
                    note += "DLPP oracle mismatch; ";
                    break;
                }
    }

    // Stationary last passage percolation, 64x64, 1e4 resamples.
    double l1 = 1.0, l2 = 1.5;
    TestReport dlpp = check_stochastic_quadrant(
        make_map(MapFamily::R_DLPP, {}), sexp(l1, 0), sexp(l2, 0), sexp(l1 + l2, 0), 64, 64,
        10000, rng);
    ok = ok && dlpp.pass;
    if (!dlpp.pass) note += "DLPP stationarity failed; ";

    // Stationary site-weight polymer.
    TestReport rps = check_stochastic_quadrant(make_map(MapFamily::R_RPs, {}), ig(2, 1), ig(3, 1),
                                               ig(5, 1), 32, 32, 3000, rng);
    ok = ok && rps.pass;
    if (!rps.pass) note += "site polymer stationarity failed; ";

    // Stationary vertex occupation, 1e4 independent runs.
    double q = 0.5, alpha_v = 1.0, nu_v = 0.25, pp = 0.5;
    LocalMap hsv = make_map(MapFamily::R_HSV, {{"alpha_v", alpha_v}, {"nu_v", nu_v}, {"q", q}});
    TestReport vs = check_stochastic_quadrant(
        hsv, make_spec(DistFamily::qNB, {{"b", nu_v}, {"p", pp / alpha_v}, {"q", q}}),
        make_spec(DistFamily::qNB, {{"b", 1 / q}, {"p", -q * pp}, {"q", q}}),
        make_spec(DistFamily::Uniform01, {}), 8, 8, 10000, rng);
    ok = ok && vs.pass;
    if (!vs.pass) note += "vertex stationarity failed; ";

    report(9, "stochastic quadrant models", ok, timer.seconds(), 120.0,
           note.empty() ? "DLPP oracle + DLPP/polymer/vertex stationarity" : note);
}

// --- criterion 10: calibration of every statistical test -------------------------

void criterion_calibration() {
    Timer timer;
    RngStream rng(110);
    bool ok = true;
    std::string note;
    const int reps = 100;
    auto tally = [&](const char* tag, int passed, int needed = 95) {
        if (passed < needed) {
            ok = false;
            note += std::string(tag) + " " + std::to_string(passed) + "/100; ";
        }
    };

    Distribution e1(sexp(1, 0));
    int ks2 = 0, ks1 = 0, chi_ind = 0, chi_gof = 0, chi_bin = 0, acf = 0;
    Distribution geo(make_spec(DistFamily::ssGeo, {{"theta", 0.5}, {"M", 0}, {"m", 1}}));
    Distribution gigd(gig(1, 1, 1));
    for (int r = 0; r < reps; ++r) {
        RngStream local = rng.child(r);
        auto a = e1.sample_n(local, 5000), b = e1.sample_n(local, 5000);
        if (ks_two_sample(a, b).p_value >= 0.01) ++ks2;
        if (ks_one_sample(a, e1).p_value >= 0.01) ++ks1;
        std::vector<std::pair<double, double>> pairs(20000);
        for (auto& p : pairs) p = {local.uniform01(), local.uniform01()};
        if (chi2_independence(pairs, 8).p_value >= 0.01) ++chi_ind;
        if (chi2_gof_discrete(geo.sample_n(local, 5000), geo).p_value >= 0.01) ++chi_gof;
        if (chi2_gof_binned(gigd.sample_n(local, 5000), gigd, 32).p_value >= 0.01) ++chi_bin;
        std::vector<double> series(512);
        for (auto& v : series) v = local.normal();
        bool within = true;
        for (std::size_t lag = 1; lag <= 4; ++lag)
            within = within && std::fabs(autocorrelation(series, lag)) <= 3.0 / std::sqrt(512.0);
        if (within) ++acf;
    }
    tally("ks_two_sample", ks2);
    tally("ks_one_sample", ks1);
    tally("chi2_independence", chi_ind);
    tally("chi2_gof_discrete", chi_gof);
    tally("chi2_gof_binned", chi_bin);
    tally("autocorrelation", acf);
    char summary[160];
    std::snprintf(summary, sizeof summary, "null pass counts %d/%d/%d/%d/%d/%d of 100", ks2, ks1,
                  chi_ind, chi_gof, chi_bin, acf);
    report(10, "statistical test calibration", ok, timer.seconds(), 60.0,
           note.empty() ? summary : note);
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion_involution();
    criterion_exact_detailed_balance();
    criterion_continuous_detailed_balance();
    criterion_invariance();
    criterion_burke();
    criterion_reconstruction();
    criterion_ultradiscretization();
    criterion_correspondence();
    criterion_quadrant();
    criterion_calibration();
    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
