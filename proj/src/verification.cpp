#include "ilat/verification.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "json.hpp"

#include "ilat/parallel.hpp"
#include "ilat/stochastic_lattice.hpp"

namespace ilat {

namespace {

struct SubTest {
    std::string name;
    double raw = 0.0;   // observed value (p-value, KS distance, count, ...)
    double crit = 0.0;  // critical value it is held against
    double ratio = 0.0; // <= 1 iff the sub-test passes
};

SubTest p_sub(const std::string& name, double p, double crit) {
    return {name, p, crit, p_value_ratio(p, crit)};
}

SubTest bound_sub(const std::string& name, double value, double bound) {
    return {name, value, bound, bound > 0 ? value / bound : (value > 0 ? 2.0 : 0.0)};
}

TestReport finalize(std::string name, std::string property, std::uint64_t seed,
                    std::size_t n_samples, const std::vector<SubTest>& subs) {
    TestReport r;
    r.name = std::move(name);
    r.property = std::move(property);
    r.seed = seed;
    r.n_samples = n_samples;
    r.threshold = 1.0;
    r.statistic = 0.0;
    r.statistic_name = "worst_ratio";
    for (const auto& s : subs) {
        r.statistic = std::max(r.statistic, s.ratio);
        r.details[s.name] = s.raw;
        r.details[s.name + "_crit"] = s.crit;
    }
    r.pass = r.statistic <= r.threshold;
    return r;
}

bool is_type2(MapFamily f) { return f == MapFamily::udToda || f == MapFamily::dToda; }

std::pair<double, double> carrier_seeds_from(const Distribution& nu) {
    if (nu.family() == DistFamily::Dirac)
        return {nu.support_min(), nu.support_min() + 1.0};
    double lo = nu.support_min();
    if (lo == -kInf || lo <= 0.0) lo = nu.quantile(1e-4);
    double hi = nu.quantile(1.0 - 1e-4);
    if (hi <= lo) hi = lo + 1.0;
    return {lo, hi};
}

}  // namespace

double p_value_ratio(double p, double crit) {
    p = std::max(p, 1e-300);
    crit = std::clamp(crit, 1e-12, 0.5);
    return std::log10(p) / std::log10(crit);
}

std::string TestReport::to_json_string() const {
    nlohmann::json j;
    j["name"] = name;
    j["property"] = property;
    j["statistic_name"] = statistic_name;
    j["statistic"] = statistic;
    j["threshold"] = threshold;
    j["pass"] = pass;
    j["n_samples"] = n_samples;
    j["seed"] = seed;
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [k, v] : details) d[k] = v;
    j["details"] = d;
    return j.dump();
}

// --- exact pushforward machinery ------------------------------------------------

std::vector<std::pair<std::pair<double, double>, double>> pushforward_pairs(
    const LocalMap& map, const PmfTable& mu, const PmfTable& nu) {
    std::vector<std::pair<std::pair<double, double>, double>> out;
    out.reserve(mu.size() * nu.size());
    for (const auto& [x, px] : mu) {
        for (const auto& [u, pu] : nu) {
            Pair y = eval_pair_map(map, x, u);
            out.push_back({{y[0], y[1]}, px * pu});
        }
    }
    // Merge duplicate image points.
    std::sort(out.begin(), out.end());
    std::vector<std::pair<std::pair<double, double>, double>> merged;
    auto close = [](double a, double b) {
        return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
    };
    for (const auto& e : out) {
        if (!merged.empty() && close(merged.back().first.first, e.first.first) &&
            close(merged.back().first.second, e.first.second)) {
            merged.back().second += e.second;
        } else {
            merged.push_back(e);
        }
    }
    return merged;
}

double tv_distance_pairs(const std::vector<std::pair<std::pair<double, double>, double>>& p,
                         const std::vector<std::pair<std::pair<double, double>, double>>& q) {
    auto close = [](double a, double b) {
        return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
    };
    auto same = [&](const std::pair<double, double>& a, const std::pair<double, double>& b) {
        return close(a.first, b.first) && close(a.second, b.second);
    };
    auto before = [&](const std::pair<double, double>& a, const std::pair<double, double>& b) {
        if (same(a, b)) return false;
        return a < b;
    };
    double tv = 0.0;
    std::size_t i = 0, j = 0;
    while (i < p.size() || j < q.size()) {
        if (j >= q.size() || (i < p.size() && before(p[i].first, q[j].first))) {
            tv += std::fabs(p[i].second);
            ++i;
        } else if (i >= p.size() || before(q[j].first, p[i].first)) {
            tv += std::fabs(q[j].second);
            ++j;
        } else {
            tv += std::fabs(p[i].second - q[j].second);
            ++i;
            ++j;
        }
    }
    return 0.5 * tv;
}

namespace {

std::vector<std::pair<std::pair<double, double>, double>> product_pairs(const PmfTable& mu,
                                                                        const PmfTable& nu) {
    std::vector<std::pair<std::pair<double, double>, double>> out;
    for (const auto& [x, px] : mu)
        for (const auto& [u, pu] : nu) out.push_back({{x, u}, px * pu});
    std::sort(out.begin(), out.end());
    return out;
}

bool lattice_preserving(MapFamily f) {
    return f == MapFamily::udKdV || f == MapFamily::K_udT || f == MapFamily::udTodaStar;
}

}  // namespace

// --- detailed balance ------------------------------------------------------------

TestReport check_detailed_balance(const LocalMap& map, const DistSpec& mu, const DistSpec& nu,
                                  std::size_t n, RngStream& rng, double alpha, std::size_t bins,
                                  double tv_threshold) {
    validate(map);
    Distribution mu_d(mu), nu_d(nu);
    std::uint64_t seed = rng.next_u64();
    RngStream master(seed);

    if (mu_d.finite_support() && nu_d.finite_support() && lattice_preserving(map.family)) {
        auto push = pushforward_pairs(map, mu_d.exact_pmf_table(), nu_d.exact_pmf_table());
        auto prod = product_pairs(mu_d.exact_pmf_table(), nu_d.exact_pmf_table());
        double tv = tv_distance_pairs(push, prod);
        TestReport r;
        r.name = "detailed_balance";
        r.property = "pushforward of mu x nu equals mu x nu (exact enumeration)";
        r.statistic_name = "tv";
        r.statistic = tv;
        r.threshold = tv_threshold;
        r.pass = tv <= tv_threshold;
        r.n_samples = mu_d.exact_pmf_table().size() * nu_d.exact_pmf_table().size();
        r.seed = seed;
        r.details["tv"] = tv;
        return r;
    }

    RngStream sx = master.child(0), su = master.child(1);
    std::vector<double> xs = mu_d.sample_n(sx, n), us = nu_d.sample_n(su, n);
    std::vector<double> xo(n), uo(n);
    std::vector<std::pair<double, double>> pairs(n);
    for (std::size_t i = 0; i < n; ++i) {
        Pair y = eval_pair_map(map, xs[i], us[i]);
        xo[i] = y[0];
        uo[i] = y[1];
        pairs[i] = {y[0], y[1]};
    }
    double crit = alpha / 3.0;
    std::vector<SubTest> subs;
    subs.push_back(p_sub("marginal_x", marginal_p_value(xo, mu_d), crit));
    subs.push_back(p_sub("marginal_u", marginal_p_value(uo, nu_d), crit));
    subs.push_back(p_sub("independence", chi2_independence(pairs, bins).p_value, crit));
    auto r = finalize("detailed_balance", "pushforward of mu x nu equals mu x nu (Monte Carlo)",
                      seed, n, subs);
    return r;
}

TestReport check_detailed_balance_star(const LocalMap& star, const DistSpec& mu,
                                       const DistSpec& nu, const DistSpec& mu_t,
                                       const DistSpec& nu_t, std::size_t n, RngStream& rng,
                                       double alpha, std::size_t bins) {
    Distribution mu_d(mu), nu_d(nu), mut_d(mu_t), nut_d(nu_t);
    std::uint64_t seed = rng.next_u64();
    RngStream master(seed);

    if (mu_d.finite_support() && nu_d.finite_support() && mut_d.finite_support() &&
        nut_d.finite_support() && lattice_preserving(star.family)) {
        LocalMap as_pair = star;  // eval through the star dispatch below
        auto push = [&] {
            std::vector<std::pair<std::pair<double, double>, double>> out;
            for (const auto& [x, px] : mu_d.exact_pmf_table())
                for (const auto& [u, pu] : nu_d.exact_pmf_table()) {
                    Pair y = eval_star(as_pair, x, u);
                    out.push_back({{y[0], y[1]}, px * pu});
                }
            std::sort(out.begin(), out.end());
            return out;
        }();
        auto prod = product_pairs(mut_d.exact_pmf_table(), nut_d.exact_pmf_table());
        double tv = tv_distance_pairs(push, prod);
        TestReport r;
        r.name = "detailed_balance_star";
        r.property = "star(mu x nu) equals mu~ x nu~ (exact enumeration)";
        r.statistic_name = "tv";
        r.statistic = tv;
        r.threshold = 1e-14;
        r.pass = tv <= r.threshold;
        r.n_samples = mu_d.exact_pmf_table().size() * nu_d.exact_pmf_table().size();
        r.seed = seed;
        r.details["tv"] = tv;
        return r;
    }

    RngStream sx = master.child(0), su = master.child(1), st = master.child(2);
    std::vector<double> xs = mu_d.sample_n(sx, n), us = nu_d.sample_n(su, n);
    std::vector<double> ts = mut_d.sample_n(st, n);

    std::vector<double> xt(n), ut(n), a2(n), b2(n), c2(n);
    std::vector<std::pair<double, double>> pairs_star(n), pab(n), pac(n), pbc(n);
    ThreePointMap f3 = three_point_involution(star);
    for (std::size_t i = 0; i < n; ++i) {
        Pair y = eval_star(star, xs[i], us[i]);
        xt[i] = y[0];
        ut[i] = y[1];
        pairs_star[i] = {y[0], y[1]};
        Triple out = f3({ts[i], xs[i], us[i]});
        a2[i] = out[0];
        b2[i] = out[1];
        c2[i] = out[2];
        pab[i] = {out[0], out[1]};
        pac[i] = {out[0], out[2]};
        pbc[i] = {out[1], out[2]};
    }
    double crit = alpha / 9.0;
    std::vector<SubTest> subs;
    subs.push_back(p_sub("star_marginal_x", marginal_p_value(xt, mut_d), crit));
    subs.push_back(p_sub("star_marginal_u", marginal_p_value(ut, nut_d), crit));
    subs.push_back(p_sub("star_independence", chi2_independence(pairs_star, bins).p_value, crit));
    subs.push_back(p_sub("tri_marginal_a", marginal_p_value(a2, mut_d), crit));
    subs.push_back(p_sub("tri_marginal_b", marginal_p_value(b2, mu_d), crit));
    subs.push_back(p_sub("tri_marginal_c", marginal_p_value(c2, nu_d), crit));
    subs.push_back(p_sub("tri_indep_ab", chi2_independence(pab, bins).p_value, crit));
    subs.push_back(p_sub("tri_indep_ac", chi2_independence(pac, bins).p_value, crit));
    subs.push_back(p_sub("tri_indep_bc", chi2_independence(pbc, bins).p_value, crit));
    return finalize("detailed_balance_star",
                    "star pushforward and three-point fixed point agree with the product laws",
                    seed, n, subs);
}

// --- predicted carrier laws --------------------------------------------------------

DistSpec predicted_carrier_law(const LocalMap& model, const DistSpec& mu,
                               const std::optional<DistSpec>& mu_tilde) {
    auto near = [](double a, double b) {
        if (!std::isfinite(a) || !std::isfinite(b)) return a == b;
        return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
    };
    switch (model.family) {
        case MapFamily::udKdV: {
            double J = model.param("J"), K = model.param("K");
            if (J == K) return mu;
            if (mu.family == DistFamily::stExp || mu.family == DistFamily::sExp) {
                double lambda = mu.param("lambda");
                double c = mu.family == DistFamily::sExp ? mu.param("c") : mu.param("c1");
                double c2 = mu.family == DistFamily::sExp ? kInf : mu.param("c2");
                if (!near(c2, J - c) && !(c2 == kInf && J == kInf))
                    fail(ErrorKind::UnsupportedFamily, "mu is not matched to J (expect c2 = J - c)");
                if (K == kInf) return make_spec(DistFamily::sExp, {{"lambda", lambda}, {"c", c}});
                return make_spec(DistFamily::stExp, {{"lambda", lambda}, {"c1", c}, {"c2", K - c}});
            }
            if (mu.family == DistFamily::sstbGeo || mu.family == DistFamily::ssGeo) {
                double theta = mu.param("theta");
                double M = mu.param("M");
                double m = mu.param("m");
                double kappa = mu.family == DistFamily::ssGeo ? 1.0 : mu.param("kappa");
                double N_mu = mu.family == DistFamily::ssGeo ? kInf : mu.param("N");
                if (N_mu != kInf && !near(m * N_mu, J - m * M))
                    fail(ErrorKind::UnsupportedFamily, "mu is not matched to J (expect mN = J - mM)");
                double N_nu = K == kInf ? kInf : (K - m * M) / m;
                return make_spec(DistFamily::sstbGeo, {{"theta", theta},
                                                       {"M", M},
                                                       {"N", N_nu},
                                                       {"kappa", kappa},
                                                       {"m", m}});
            }
            break;
        }
        case MapFamily::dKdV: {
            double a = model.param("alpha"), b = model.param("beta");
            if (a == b) return mu;
            double lambda, c;
            if (mu.family == DistFamily::GIG) {
                lambda = mu.param("lambda");
                c = mu.param("c2");
                if (!near(mu.param("c1"), a * c))
                    fail(ErrorKind::UnsupportedFamily, "mu is not matched to alpha (expect c1 = alpha*c2)");
            } else if (mu.family == DistFamily::IG) {
                if (a != 0.0)
                    fail(ErrorKind::UnsupportedFamily, "IG(lambda, c) pairs with alpha = 0");
                lambda = mu.param("lambda");
                c = mu.param("c");
            } else {
                break;
            }
            return make_spec(DistFamily::GIG, {{"lambda", lambda}, {"c1", b * c}, {"c2", c}});
        }
        case MapFamily::udToda: {
            if (!mu_tilde) fail(ErrorKind::InvalidParams, "udToda prediction needs mu_tilde");
            if (mu.family == DistFamily::sExp && mu_tilde->family == DistFamily::sExp) {
                double l1 = mu.param("lambda"), l12 = mu_tilde->param("lambda");
                double c = mu.param("c");
                if (!near(c, mu_tilde->param("c")))
                    fail(ErrorKind::UnsupportedFamily, "shifts of mu and mu_tilde must agree");
                if (!(l12 > l1))
                    fail(ErrorKind::UnsupportedFamily, "mu_tilde rate must exceed mu rate");
                return make_spec(DistFamily::sExp, {{"lambda", l12 - l1}, {"c", c}});
            }
            if (mu.family == DistFamily::ssGeo && mu_tilde->family == DistFamily::ssGeo) {
                double t1 = mu.param("theta"), t12 = mu_tilde->param("theta");
                if (!near(mu.param("M"), mu_tilde->param("M")) ||
                    !near(mu.param("m"), mu_tilde->param("m")))
                    fail(ErrorKind::UnsupportedFamily, "M and m of mu and mu_tilde must agree");
                if (!(t12 < t1))
                    fail(ErrorKind::UnsupportedFamily, "need theta_tilde = theta1*theta2 < theta1");
                return make_spec(DistFamily::ssGeo, {{"theta", t12 / t1},
                                                     {"M", mu.param("M")},
                                                     {"m", mu.param("m")}});
            }
            break;
        }
        case MapFamily::dToda: {
            if (!mu_tilde) fail(ErrorKind::InvalidParams, "dToda prediction needs mu_tilde");
            if (mu.family == DistFamily::Gam && mu_tilde->family == DistFamily::Gam) {
                double l1 = mu.param("lambda"), l12 = mu_tilde->param("lambda");
                double c = mu.param("c");
                if (!near(c, mu_tilde->param("c")))
                    fail(ErrorKind::UnsupportedFamily, "rates of mu and mu_tilde must agree");
                if (!(l12 > l1))
                    fail(ErrorKind::UnsupportedFamily, "mu_tilde shape must exceed mu shape");
                return make_spec(DistFamily::Gam, {{"lambda", l12 - l1}, {"c", c}});
            }
            break;
        }
        default: break;
    }
    fail(ErrorKind::UnsupportedFamily,
         "no known carrier law for this model/measure combination; pass an explicit nu");
}

// --- invariance ----------------------------------------------------------------------

namespace {

void invariance_prechecks(const LocalMap& model, const Distribution& mu_d,
                          const std::optional<Distribution>& mut_d, const Distribution& nu_d) {
    switch (model.family) {
        case MapFamily::udKdV: {
            double J = model.param("J"), K = model.param("K");
            if (J == K) return;
            if (mu_d.family() == DistFamily::Dirac && mu_d.support_min() == J / 2.0)
                fail(ErrorKind::InvalidParams, "mu = point mass at J/2 is excluded");
            if (K == kInf && J < kInf && !(mu_d.mean() < J / 2.0))
                fail(ErrorKind::InvalidParams, "need mean(mu) < J/2 for a unique carrier");
            break;
        }
        case MapFamily::dKdV: {
            double a = model.param("alpha"), b = model.param("beta");
            if (a == b) return;
            if (a > 0.0 && b > 0.0)
                fail(ErrorKind::UnsupportedRegime, "alpha*beta > 0 carrier solving is not supported");
            double decay = a > 0.0 ? a : b;
            if (!(2.0 * mu_d.mean_log() < -std::log(decay)))
                fail(ErrorKind::InvalidParams, "mean-log condition 2 E[log X] < -log(alpha) fails");
            break;
        }
        case MapFamily::udToda: {
            if (!mut_d) fail(ErrorKind::InvalidParams, "udToda invariance needs mu_tilde");
            if (!(mut_d->mean() < mu_d.mean()))
                fail(ErrorKind::InvalidParams, "need E[Q] < E[E] for a unique carrier");
            break;
        }
        case MapFamily::dToda: {
            if (!mut_d) fail(ErrorKind::InvalidParams, "dToda invariance needs mu_tilde");
            if (!(mu_d.mean_log() < mut_d->mean_log()))
                fail(ErrorKind::InvalidParams, "need E[log J] < E[log I] for a unique carrier");
            break;
        }
        default: fail(ErrorKind::UnsupportedFamily, "invariance applies to lattice models");
    }
    (void)nu_d;
}

}  // namespace

TestReport check_invariance(const LocalMap& model, const DistSpec& mu,
                            const std::optional<DistSpec>& mu_tilde, std::size_t window,
                            std::size_t margin, std::size_t n_fields, RngStream& rng, double alpha,
                            const std::optional<DistSpec>& nu_override) {
    validate(model);
    if (window <= margin + 2) fail(ErrorKind::InvalidParams, "window must exceed margin + 2");
    Distribution mu_d(mu);
    std::optional<Distribution> mut_d;
    if (mu_tilde) mut_d.emplace(*mu_tilde);
    DistSpec nu_spec = nu_override ? *nu_override : predicted_carrier_law(model, mu, mu_tilde);
    Distribution nu_d(nu_spec);
    invariance_prechecks(model, mu_d, mut_d, nu_d);

    std::uint64_t seed = rng.next_u64();
    RngStream master(seed);
    bool type2 = is_type2(model.family);

    struct FieldResult {
        std::vector<double> evolved_a;  // type I: x'; type II: Q' (resp. I')
        std::vector<double> evolved_b;  // type II: E' (resp. J')
        std::vector<double> carrier;
        bool failed = false;
    };
    std::vector<FieldResult> results(n_fields);

    parallel_for(n_fields, [&](std::size_t f) {
        RngStream local = master.child(f);
        FieldResult& out = results[f];
        LatticeWindow w;
        w.offset = 0;
        w.model = model;
        w.kind = type2 ? WindowKind::typeII : WindowKind::typeI;
        if (type2) {
            for (std::size_t i = 0; i < window; ++i) {
                w.values.push_back(mut_d->sample(local));  // Q (resp. I)
                w.values.push_back(mu_d.sample(local));    // E (resp. J)
            }
        } else {
            w.values = mu_d.sample_n(local, window);
        }
        try {
            CarrierPath u;
            if (model.family == MapFamily::udToda) {
                u = solve_carrier_udtoda(w);
            } else {
                u = solve_carrier_coupled(w, carrier_seeds_from(nu_d),
                                          default_carrier_tol(model));
                if (*u.sync_index > w.offset + static_cast<long>(margin))
                    fail(ErrorKind::NotSynchronized, "sync beyond margin");
            }
            long start = w.offset + static_cast<long>(margin);
            CarrierPath trimmed;
            trimmed.offset = std::max(u.offset, start);
            trimmed.sync_index = u.sync_index;
            for (long n = trimmed.offset; n < u.offset + static_cast<long>(u.values.size()); ++n)
                trimmed.values.push_back(u.at(n));
            LatticeWindow next = evolve_one_step(w, trimmed);
            // The carrier is a Markov chain in n, so the marginal sample is
            // decimated to kill the serial dependence the KS null assumes away;
            // the evolved configuration needs no thinning (it is i.i.d. at
            // stationarity, which is the property under test).
            long stride = std::max<long>(16, static_cast<long>(window) / 64);
            for (std::size_t k = 0; k < trimmed.values.size(); k += stride)
                out.carrier.push_back(trimmed.values[k]);
            if (type2) {
                for (long i = next.offset; i <= next.last_index(); ++i) {
                    auto [qa, eb] = next.pair_at(i);
                    out.evolved_a.push_back(qa);
                    out.evolved_b.push_back(eb);
                }
            } else {
                out.evolved_a = next.values;
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::NotSynchronized) {
                out.failed = true;
            } else {
                throw;
            }
        }
    });

    std::vector<double> pooled_a, pooled_b, pooled_u;
    std::size_t failures = 0;
    for (const auto& r : results) {
        if (r.failed) {
            ++failures;
            continue;
        }
        pooled_a.insert(pooled_a.end(), r.evolved_a.begin(), r.evolved_a.end());
        pooled_b.insert(pooled_b.end(), r.evolved_b.begin(), r.evolved_b.end());
        pooled_u.insert(pooled_u.end(), r.carrier.begin(), r.carrier.end());
    }
    if (pooled_a.empty()) fail(ErrorKind::NotSynchronized, "every field failed to synchronize");

    std::size_t k = type2 ? 3 : 2;
    double crit = alpha / static_cast<double>(k);
    std::vector<SubTest> subs;
    if (type2) {
        subs.push_back(p_sub("evolved_first_slot", marginal_p_value(pooled_a, *mut_d), crit));
        subs.push_back(p_sub("evolved_second_slot", marginal_p_value(pooled_b, mu_d), crit));
    } else {
        subs.push_back(p_sub("evolved_marginal", marginal_p_value(pooled_a, mu_d), crit));
    }
    subs.push_back(p_sub("carrier_marginal", marginal_p_value(pooled_u, nu_d), crit));
    subs.push_back(bound_sub("sync_failures", static_cast<double>(failures), 0.5));
    auto rep = finalize("invariance", "one-step evolution preserves the product law", seed,
                        pooled_a.size(), subs);
    rep.details["nu_is_predicted"] = nu_override ? 0.0 : 1.0;
    return rep;
}

// --- Burke property ---------------------------------------------------------------

TestReport check_burke(const LocalMap& model, const DistSpec& mu, const DistSpec& nu,
                       std::size_t width, std::size_t t_steps, RngStream& rng, double alpha) {
    validate(model);
    Distribution mu_d(mu), nu_d(nu);
    std::uint64_t seed = rng.next_u64();
    RngStream master(seed);

    const std::size_t W = width, T = t_steps;
    std::vector<double> X((T + 1) * (W + 1), 0.0), U(T * (W + 1), 0.0);
    auto xat = [&](std::size_t t, std::size_t n) -> double& { return X[t * (W + 1) + n]; };
    auto uat = [&](std::size_t t, std::size_t n) -> double& { return U[t * (W + 1) + n]; };

    RngStream srow = master.child(0), scol = master.child(1), sbulk = master.child(2);
    for (std::size_t n = 1; n <= W; ++n) xat(0, n) = mu_d.sample(srow);
    for (std::size_t t = 0; t < T; ++t) uat(t, 0) = nu_d.sample(scol);

    bool type2 = is_type2(model.family);
    LocalMap star = type2 ? make_map(model.family == MapFamily::udToda ? MapFamily::udTodaStar
                                                                       : MapFamily::dTodaStar,
                                     {})
                          : model;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t n = 1; n <= W; ++n) {
            if (type2) {
                // Driving value distributed as star^(1)(mu x nu).
                double tilde = eval_star(star, mu_d.sample(sbulk), nu_d.sample(sbulk))[0];
                Triple out = eval_triple_map(model, {tilde, xat(t, n), uat(t, n - 1)});
                xat(t + 1, n) = out[1];
                uat(t, n) = out[2];
            } else {
                Pair out = eval_pair_map(model, xat(t, n), uat(t, n - 1));
                xat(t + 1, n) = out[0];
                uat(t, n) = out[1];
            }
        }
    }

    // Sub-test layout: 12 autocorrelation lags, 3 row marginals, 3 column
    // marginals, 1 independence table.
    std::vector<SubTest> subs;
    std::vector<std::size_t> cols = {W / 4, W / 2, 3 * W / 4};
    std::vector<std::size_t> rows = {T / 4, T / 2, 3 * T / 4};
    double acf_bound = 3.0 / std::sqrt(static_cast<double>(T));
    for (std::size_t n0 : cols) {
        std::vector<double> col(T);
        for (std::size_t t = 0; t < T; ++t) col[t] = uat(t, n0);
        for (std::size_t lag = 1; lag <= 4; ++lag) {
            double r = autocorrelation(col, lag);
            subs.push_back(bound_sub("acf_n" + std::to_string(n0) + "_lag" + std::to_string(lag),
                                     std::fabs(r), acf_bound));
        }
    }
    double crit = alpha / static_cast<double>(rows.size() + cols.size() + 1);
    for (std::size_t t0 : rows) {
        std::vector<double> row(W);
        for (std::size_t n = 1; n <= W; ++n) row[n - 1] = xat(t0, n);
        subs.push_back(p_sub("row_marginal_t" + std::to_string(t0), marginal_p_value(row, mu_d),
                             crit));
    }
    for (std::size_t n0 : cols) {
        std::vector<double> col(T);
        for (std::size_t t = 0; t < T; ++t) col[t] = uat(t, n0);
        subs.push_back(p_sub("col_marginal_n" + std::to_string(n0), marginal_p_value(col, nu_d),
                             crit));
    }
    // Output pairs along the main anti-diagonal are mutually independent at
    // stationarity, so they form an honest i.i.d. sample for the table test.
    std::vector<std::pair<double, double>> diag;
    std::size_t D = std::min(W, T);
    for (std::size_t n = 1; n < D; ++n) {
        std::size_t t = D - 1 - n;
        diag.push_back({xat(t + 1, n), uat(t, n)});
    }
    bool degenerate = mu_d.family() == DistFamily::Dirac || nu_d.family() == DistFamily::Dirac;
    if (!degenerate && diag.size() >= 25 * 16) {
        subs.push_back(p_sub("pair_independence", chi2_independence(diag, 4).p_value, crit));
    }
    return finalize("burke", "carrier columns and configuration rows are i.i.d. and independent",
                    seed, W * T, subs);
}

// --- ergodicity / reconstruction -----------------------------------------------------

TestReport check_ergodicity_reconstruction(const LocalMap& model, const DistSpec& mu,
                                           const DistSpec& nu, std::size_t width,
                                           std::size_t t_steps, RngStream& rng,
                                           std::size_t n_samples, double min_fraction) {
    validate(model);
    if (model.family != MapFamily::udKdV && model.family != MapFamily::dKdV)
        fail(ErrorKind::UnsupportedFamily, "reconstruction applies to type I models");
    Distribution mu_d(mu), nu_d(nu);

    // Prechecks for the reconstruction hypothesis.
    if (model.family == MapFamily::udKdV) {
        double J = model.param("J"), K = model.param("K");
        if (mu_d.family() == DistFamily::Dirac && mu_d.support_min() == J / 2.0)
            fail(ErrorKind::InvalidParams, "mu = point mass at J/2 is excluded");
        double mass = nu_d.cdf(J / 2.0);
        if (K != kInf) mass += 1.0 - nu_d.cdf(K - J / 2.0 - 1e-12);
        if (!(mass > 0.0))
            fail(ErrorKind::InvalidParams,
                 "nu gives no mass to (-inf, J/2] or [K - J/2, inf); reconstruction cannot couple");
    } else {
        double a = model.param("alpha"), b = model.param("beta");
        double decay = a > 0.0 ? a : b;
        if (a > 0.0 && b > 0.0) fail(ErrorKind::UnsupportedRegime, "alpha*beta > 0 not supported");
        if (!(2.0 * nu_d.mean_log() < -std::log(decay)))
            fail(ErrorKind::InvalidParams, "mean-log condition 2 E[log U] < -log(alpha) fails");
    }

    std::uint64_t seed = rng.next_u64();
    RngStream master(seed);
    std::size_t margin = (width - 4) / (t_steps + 1) >= 1 ? (width - 4) / (t_steps + 1) - 1 : 0;
    if (margin < 8) fail(ErrorKind::InvalidParams, "width too small for the requested t_steps");

    double sync_tol = default_carrier_tol(model);
    double match_tol = model.family == MapFamily::udKdV ? 0.0 : 1e-8;

    std::vector<int> ok(n_samples, 0);
    parallel_for(n_samples, [&](std::size_t s) {
        RngStream local = master.child(s);
        LatticeWindow w;
        w.offset = 0;
        w.kind = WindowKind::typeI;
        w.model = model;
        w.values = mu_d.sample_n(local, width);
        try {
            SpaceTimeField field = evolve_multi(w, t_steps, margin);
            long n0 = field.config.back().offset + 1;
            std::vector<double> ucol(t_steps), xtrue(t_steps + 1);
            for (std::size_t t = 0; t < t_steps; ++t) ucol[t] = field.carrier[t].at(n0 - 1);
            for (std::size_t t = 0; t <= t_steps; ++t) xtrue[t] = field.config[t].x_at(n0);
            auto seeds = std::pair{mu_d.quantile(0.01), mu_d.quantile(0.99)};
            if (seeds.first == seeds.second) seeds.second += 1.0;
            ReconstructedColumn rec = reconstruct_from_carrier(ucol, model, seeds, sync_tol);
            if (rec.sync_t > static_cast<long>(t_steps) - 4) return;  // nothing left to compare
            double err = 0.0;
            for (std::size_t k = 0; k < rec.values.size(); ++k)
                err = std::max(err, std::fabs(rec.values[k] -
                                              xtrue[static_cast<std::size_t>(rec.sync_t) + k]));
            if (err <= match_tol) ok[s] = 1;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotSynchronized && e.kind() != ErrorKind::CoverageError)
                throw;
        }
    });

    std::size_t good = 0;
    for (int v : ok) good += v;
    double fraction = static_cast<double>(good) / static_cast<double>(n_samples);
    TestReport r;
    r.name = "ergodicity_reconstruction";
    r.property = "the carrier column determines the configuration column";
    r.statistic_name = "failure_fraction";
    r.statistic = 1.0 - fraction;
    r.threshold = 1.0 - min_fraction + 1e-12;
    r.pass = r.statistic <= r.threshold;
    r.n_samples = n_samples;
    r.seed = seed;
    r.details["fraction_reconstructed"] = fraction;
    return r;
}

// --- ultra-discretization limits ------------------------------------------------------

TestReport check_ultradiscretization(UdTarget target, const UdParams& params,
                                     const std::vector<double>& eps_list, std::size_t n,
                                     RngStream& rng, double final_bound, double inversion_slack) {
    if (eps_list.empty()) fail(ErrorKind::InvalidParams, "eps_list must be nonempty");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            fail(ErrorKind::InvalidParams, "eps_list must be strictly decreasing");

    std::uint64_t seed = rng.next_u64();
    RngStream master(seed);

    DistSpec limit =
        target == UdTarget::sExp_from_Gam
            ? make_spec(DistFamily::sExp, {{"lambda", params.lambda}, {"c", params.c}})
            : make_spec(DistFamily::stExp,
                        {{"lambda", params.lambda}, {"c1", params.c}, {"c2", params.L - params.c}});
    Distribution limit_d(limit);

    std::vector<double> ks_curve;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        double eps = eps_list[i];
        auto check_exp = [&](double v) {
            if (std::fabs(v) / eps > 700.0)
                fail(ErrorKind::SamplerOverflow, "exp(" + std::to_string(v / eps) +
                                                     ") exceeds the floating range");
        };
        check_exp(params.c);
        RngStream local = master.child(i);
        std::vector<double> ys(n);
        if (target == UdTarget::sExp_from_Gam) {
            Distribution gam(make_spec(
                DistFamily::Gam, {{"lambda", params.lambda * eps}, {"c", std::exp(params.c / eps)}}));
            for (auto& y : ys) y = -eps * std::log(gam.sample(local));
        } else {
            if (params.L != kInf) check_exp(params.c - params.L);
            double c1 = params.L == kInf ? 0.0 : std::exp((params.c - params.L) / eps);
            Distribution gig(make_spec(DistFamily::GIG, {{"lambda", params.lambda * eps},
                                                         {"c1", c1},
                                                         {"c2", std::exp(params.c / eps)}}));
            for (auto& y : ys) y = eps * std::log(gig.sample(local));
        }
        ks_curve.push_back(ks_one_sample(ys, limit_d).statistic);
    }

    // Monotone-with-one-inversion acceptance.
    std::vector<double> increases;
    for (std::size_t i = 1; i < ks_curve.size(); ++i)
        if (ks_curve[i] > ks_curve[i - 1]) increases.push_back(ks_curve[i] - ks_curve[i - 1]);
    std::sort(increases.rbegin(), increases.rend());

    std::vector<SubTest> subs;
    subs.push_back(bound_sub("final_ks", ks_curve.back(), final_bound));
    double worst_inv = increases.empty() ? 0.0 : increases.front();
    subs.push_back(bound_sub("largest_inversion", worst_inv, inversion_slack));
    subs.push_back(bound_sub("extra_inversions",
                             increases.size() > 1 ? static_cast<double>(increases.size() - 1) : 0.0,
                             0.5));
    auto r = finalize("ultradiscretization",
                      "eps log X converges in distribution to the piecewise-exponential limit",
                      seed, n, subs);
    for (std::size_t i = 0; i < ks_curve.size(); ++i) {
        r.details["ks_eps_" + std::to_string(i)] = ks_curve[i];
        r.details["eps_" + std::to_string(i)] = eps_list[i];
    }
    return r;
}

// --- KdV-Toda correspondence ------------------------------------------------------------

TestReport check_correspondence(CorrespondenceSide side, const CorrespondenceParams& params,
                                std::size_t n, const std::vector<double>& eps_list,
                                RngStream& rng, double conj_bound, double final_bound) {
    std::uint64_t seed = rng.next_u64();
    RngStream master(seed);
    std::vector<SubTest> subs;

    // (i) pointwise conjugation identity.
    {
        RngStream pts = master.child(0);
        double worst = 0.0;
        for (std::size_t i = 0; i < 10000; ++i) {
            if (side == CorrespondenceSide::ultra) {
                // Dyadic points keep the max-plus arithmetic exact.
                double x = static_cast<double>(static_cast<long>(pts.below(1 << 21)) - (1 << 20)) /
                           std::exp2(17);
                double u = static_cast<double>(static_cast<long>(pts.below(1 << 21)) - (1 << 20)) /
                           std::exp2(17);
                Pair direct = udkdv_map(params.J, kInf, x, u);
                Pair conj = udkdv_via_k_udt(params.J, x, u);
                worst = std::max({worst, std::fabs(direct[0] - conj[0]),
                                  std::fabs(direct[1] - conj[1])});
            } else {
                double x = std::exp(pts.uniform(-3.0, 3.0)), u = std::exp(pts.uniform(-3.0, 3.0));
                Pair direct = dkdv_map(params.alpha, 0.0, x, u);
                Pair conj = dkdv_via_k_dt(params.alpha, x, u);
                worst = std::max({worst,
                                  std::fabs(direct[0] - conj[0]) / std::max(1.0, std::fabs(direct[0])),
                                  std::fabs(direct[1] - conj[1]) / std::max(1.0, std::fabs(direct[1]))});
            }
        }
        subs.push_back(bound_sub("conjugation_max_err", worst, conj_bound));
    }

    // (ii) conditioning limit of the invariant triple onto the symmetry slice.
    DistSpec law_a, law_b, law_c, pred_b, pred_c;
    if (side == CorrespondenceSide::ultra) {
        if (!(params.c < 0)) fail(ErrorKind::InvalidParams, "ultra side requires c < 0");
        law_a = make_spec(DistFamily::sExp,
                          {{"lambda", params.lambda1 + params.lambda2}, {"c", params.c}});
        law_b = make_spec(DistFamily::sExp, {{"lambda", params.lambda1}, {"c", params.c}});
        law_c = make_spec(DistFamily::sExp, {{"lambda", params.lambda2}, {"c", params.c}});
        pred_b = make_spec(DistFamily::stExp,
                           {{"lambda", -params.lambda2}, {"c1", params.c}, {"c2", -params.c}});
        pred_c = law_c;
    } else {
        if (!(params.c > 0)) fail(ErrorKind::InvalidParams, "discrete side requires c > 0");
        law_a = make_spec(DistFamily::Gam,
                          {{"lambda", params.lambda1 + params.lambda2}, {"c", params.c}});
        law_b = make_spec(DistFamily::Gam, {{"lambda", params.lambda1}, {"c", params.c}});
        law_c = make_spec(DistFamily::Gam, {{"lambda", params.lambda2}, {"c", params.c}});
        pred_b = make_spec(DistFamily::GIG,
                           {{"lambda", params.lambda2}, {"c1", params.c}, {"c2", params.c}});
        pred_c = law_c;
    }
    Distribution da(law_a), db(law_b), dc(law_c), pb(pred_b), pc(pred_c);

    double final_ks_b = 0.0, final_ks_c = 0.0;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        double eps = eps_list[i];
        RngStream local = master.child(100 + i);
        std::vector<double> bs, cs;
        bs.reserve(n);
        std::size_t proposals = 0, batch = 65536;
        while (bs.size() < n) {
            for (std::size_t k = 0; k < batch; ++k) {
                double A = da.sample(local), B = db.sample(local), C = dc.sample(local);
                bool accept = side == CorrespondenceSide::ultra ? std::fabs(A + B) <= eps
                                                                : std::fabs(A * B - 1.0) <= eps;
                if (accept) {
                    bs.push_back(B);
                    cs.push_back(C);
                    if (bs.size() >= n) break;
                }
            }
            proposals += batch;
            if (proposals >= 4 * batch && static_cast<double>(bs.size()) / proposals < 1e-4)
                fail(ErrorKind::RejectionStarved, "conditioning acceptance rate below 1e-4");
        }
        double ks_b = ks_one_sample(bs, pb).statistic;
        double ks_c = ks_one_sample(cs, pc).statistic;
        if (i + 1 == eps_list.size()) {
            final_ks_b = ks_b;
            final_ks_c = ks_c;
        }
    }
    subs.push_back(bound_sub("final_ks_b", final_ks_b, final_bound));
    subs.push_back(bound_sub("final_ks_c", final_ks_c, final_bound));
    return finalize("correspondence",
                    "slice conjugation and conditioning limits link the KdV and Toda families",
                    seed, n, subs);
}

// --- quadrant stationarity ----------------------------------------------------------------

TestReport check_stochastic_quadrant(const LocalMap& model, const DistSpec& boundary_x,
                                     const DistSpec& boundary_u, const DistSpec& bulk,
                                     std::size_t n, std::size_t m, std::size_t resamples,
                                     RngStream& rng, double alpha) {
    std::uint64_t seed = rng.next_u64();
    RngStream master(seed);
    Distribution bx(boundary_x), bu(boundary_u);

    if (model.family == MapFamily::R_HSV) {
        std::vector<double> xs(resamples), us(resamples);
        parallel_for(resamples, [&](std::size_t r) {
            RngStream local = master.child(r);
            QuadrantField f = hsv_run(model, boundary_x, boundary_u, n, m, local);
            xs[r] = f.X(n, m);
            us[r] = f.U(n, m);
        });
        double crit = alpha / 2.0;
        std::vector<SubTest> subs;
        subs.push_back(p_sub("occupation_pmf", marginal_p_value(xs, bx), crit));
        subs.push_back(p_sub("passing_pmf", marginal_p_value(us, bu), crit));
        return finalize("stochastic_quadrant", "the vertex occupation law is stationary", seed,
                        resamples, subs);
    }

    std::size_t D = std::min(n, m);
    if (D < 3) fail(ErrorKind::InvalidParams, "quadrant too small for anti-diagonal tests");
    struct Slice {
        std::vector<double> u_diag, v_diag;
        double pair_a = 0, pair_b = 0;
        double residual = 0;
    };
    std::vector<Slice> slices(resamples);
    parallel_for(resamples, [&](std::size_t r) {
        RngStream local = master.child(r);
        QuadrantField f = run_quadrant(model, boundary_x, boundary_u, bulk, n, m, local);
        Slice& s = slices[r];
        for (std::size_t i = 1; i < D; ++i) {
            std::size_t j = D - i;
            s.u_diag.push_back(f.U(i, j));
            s.v_diag.push_back(f.V(i, j));
        }
        s.pair_a = f.U(1, D - 1);
        s.pair_b = f.U(D - 1, 1);
        s.residual = f.max_recursion_residual();
    });

    std::vector<double> u_pool, v_pool;
    std::vector<std::pair<double, double>> pairs;
    double worst_res = 0.0;
    for (const auto& s : slices) {
        u_pool.insert(u_pool.end(), s.u_diag.begin(), s.u_diag.end());
        v_pool.insert(v_pool.end(), s.v_diag.begin(), s.v_diag.end());
        pairs.push_back({s.pair_a, s.pair_b});
        worst_res = std::max(worst_res, s.residual);
    }
    double crit = alpha / 3.0;
    std::vector<SubTest> subs;
    subs.push_back(p_sub("u_increment_marginal", marginal_p_value(u_pool, bx), crit));
    subs.push_back(p_sub("v_increment_marginal", marginal_p_value(v_pool, bu), crit));
    if (pairs.size() >= 25 * 16)
        subs.push_back(p_sub("pair_independence", chi2_independence(pairs, 4).p_value, crit));
    subs.push_back(bound_sub("recursion_residual", worst_res,
                             model.family == MapFamily::R_DLPP ? 1e-12 : 1e-10));
    return finalize("stochastic_quadrant",
                    "anti-diagonal increments carry the stationary boundary laws", seed,
                    resamples, subs);
}

// --- helpers ---------------------------------------------------------------------------

PmfTable carrier_fixed_point_two_state(const LocalMap& map, double p_one, std::size_t truncation,
                                       double tol) {
    if (!(p_one > 0 && p_one < 1)) fail(ErrorKind::InvalidParams, "p must lie in (0,1)");
    std::vector<double> nu(truncation + 1, 1.0 / static_cast<double>(truncation + 1));
    std::vector<double> next(truncation + 1, 0.0);
    for (int iter = 0; iter < 200000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t u = 0; u <= truncation; ++u) {
            for (int x = 0; x <= 1; ++x) {
                double w = (x == 1 ? p_one : 1.0 - p_one) * nu[u];
                double up = eval_pair_map(map, static_cast<double>(x), static_cast<double>(u))[1];
                long idx = std::lround(up);
                if (idx < 0) idx = 0;
                if (idx > static_cast<long>(truncation)) idx = static_cast<long>(truncation);
                next[static_cast<std::size_t>(idx)] += w;
            }
        }
        double diff = 0.0;
        for (std::size_t u = 0; u <= truncation; ++u) diff = std::max(diff, std::fabs(next[u] - nu[u]));
        nu.swap(next);
        if (diff < tol) break;
    }
    PmfTable out;
    for (std::size_t u = 0; u <= truncation; ++u)
        if (nu[u] > 0) out.emplace_back(static_cast<double>(u), nu[u]);
    return out;
}

}  // namespace ilat
