#include "ilat/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace ilat {

double kolmogorov_q(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * t * t);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double chi2_sf(double statistic, double dof) {
    if (dof <= 0.0) return 1.0;
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

double normal_two_sided_p(double z) { return boost::math::erfc(std::fabs(z) / std::sqrt(2.0)); }

namespace {
double ks_p_value(double d, double n_eff) {
    double sn = std::sqrt(n_eff);
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}
}  // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) fail(ErrorKind::EmptySample, "two-sample KS needs nonempty inputs");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult r;
    r.statistic = d;
    r.n_eff = na * nb / (na + nb);
    r.p_value = ks_p_value(d, r.n_eff);
    return r;
}

KsResult ks_one_sample(std::vector<double> sample, const Distribution& dist) {
    if (sample.empty()) fail(ErrorKind::EmptySample, "one-sample KS needs a nonempty sample");
    std::sort(sample.begin(), sample.end());
    double n = static_cast<double>(sample.size());
    bool discrete = dist.discrete();
    double d = 0.0;
    std::size_t i = 0;
    while (i < sample.size()) {
        // Handle ties as one jump of the empirical cdf; at an atom the
        // comparison below the jump uses the left limit of the model cdf.
        std::size_t j = i;
        while (j < sample.size() && sample[j] == sample[i]) ++j;
        double v = sample[i];
        double f = dist.cdf(v);
        double f_left = discrete ? f - dist.density(v) : f;
        d = std::max(d, std::fabs(static_cast<double>(j) / n - f));
        d = std::max(d, std::fabs(static_cast<double>(i) / n - f_left));
        i = j;
    }
    KsResult r;
    r.statistic = d;
    r.n_eff = n;
    r.p_value = ks_p_value(d, n);
    return r;
}

Chi2Result chi2_independence(const std::vector<std::pair<double, double>>& pairs,
                             std::size_t bins) {
    if (bins < 2) fail(ErrorKind::InvalidParams, "need at least 2 bins");
    if (pairs.size() < 25 * bins * bins)
        fail(ErrorKind::TooFewSamples, "chi2 independence requires >= 25*bins^2 samples");

    auto edges_of = [&](auto get) {
        std::vector<double> v(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) v[i] = get(pairs[i]);
        std::sort(v.begin(), v.end());
        std::vector<double> edges;
        for (std::size_t k = 1; k < bins; ++k) {
            double e = v[k * v.size() / bins];
            if (edges.empty() || e > edges.back()) edges.push_back(e);
        }
        return edges;
    };
    std::vector<double> ex = edges_of([](const auto& p) { return p.first; });
    std::vector<double> ey = edges_of([](const auto& p) { return p.second; });
    std::size_t r = ex.size() + 1, c = ey.size() + 1;

    auto bin_of = [](const std::vector<double>& edges, double x) {
        return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) -
                                        edges.begin());
    };
    std::vector<double> table(r * c, 0.0), row(r, 0.0), col(c, 0.0);
    for (const auto& p : pairs) {
        std::size_t i = bin_of(ex, p.first), j = bin_of(ey, p.second);
        table[i * c + j] += 1.0;
        row[i] += 1.0;
        col[j] += 1.0;
    }
    double n = static_cast<double>(pairs.size());
    double stat = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            double e = row[i] * col[j] / n;
            if (e > 0.0) stat += sqr(table[i * c + j] - e) / e;
        }
    }
    Chi2Result out;
    out.statistic = stat;
    out.dof = (r - 1) * (c - 1);
    out.p_value = chi2_sf(stat, static_cast<double>(out.dof));
    return out;
}

Chi2Result chi2_gof_discrete(const std::vector<double>& sample, const Distribution& dist) {
    if (sample.empty()) fail(ErrorKind::EmptySample, "empty sample");
    double n = static_cast<double>(sample.size());

    // Category list: exact table for finite support, otherwise walk until the
    // expected tail mass is small, then pool the tail.
    PmfTable cats;
    if (dist.finite_support()) {
        cats = dist.exact_pmf_table();
    } else {
        double prev_cdf = 0.0;
        double x = dist.support_min();
        double step = dist.family() == DistFamily::qNB ? 1.0 : dist.spec().param_or("m", 1.0);
        if (dist.support_min() == -kInf) {
            x = dist.quantile(0.5 / n);
            x = std::floor(x / step) * step;
            prev_cdf = dist.cdf(x - step);
        }
        for (int guard = 0; guard < 1000000; ++guard) {
            double f = dist.cdf(x);
            cats.emplace_back(x, f - prev_cdf);
            prev_cdf = f;
            if (1.0 - f < 2.0 / n) break;
            x += step;
        }
        cats.emplace_back(x + step, 1.0 - prev_cdf);  // pooled upper tail
    }

    std::vector<double> expected, observed, xs;
    for (const auto& [x, p] : cats) {
        expected.push_back(p * n);
        observed.push_back(0.0);
        xs.push_back(x);
    }
    for (double v : sample) {
        // Count into the nearest category; values beyond the last support
        // point land in the pooled tail.
        auto it = std::lower_bound(xs.begin(), xs.end(), v);
        std::size_t hi = static_cast<std::size_t>(it - xs.begin());
        std::size_t best;
        if (hi == 0) {
            best = 0;
        } else if (hi >= xs.size()) {
            best = xs.size() - 1;
        } else {
            best = (v - xs[hi - 1] <= xs[hi] - v) ? hi - 1 : hi;
        }
        observed[best] += 1.0;
    }

    // Pool adjacent categories until every expected count is at least 5.
    std::vector<double> eo, oo;
    double accE = 0.0, accO = 0.0;
    for (std::size_t k = 0; k < expected.size(); ++k) {
        accE += expected[k];
        accO += observed[k];
        if (accE >= 5.0) {
            eo.push_back(accE);
            oo.push_back(accO);
            accE = accO = 0.0;
        }
    }
    if (accE > 0.0) {
        if (eo.empty()) {
            eo.push_back(accE);
            oo.push_back(accO);
        } else {
            eo.back() += accE;
            oo.back() += accO;
        }
    }
    Chi2Result out;
    if (eo.size() < 2) {
        out.statistic = 0.0;
        out.dof = 0;
        out.p_value = 1.0;
        return out;
    }
    double stat = 0.0;
    for (std::size_t k = 0; k < eo.size(); ++k) stat += sqr(oo[k] - eo[k]) / eo[k];
    out.statistic = stat;
    out.dof = eo.size() - 1;
    out.p_value = chi2_sf(stat, static_cast<double>(out.dof));
    return out;
}

Chi2Result chi2_gof_binned(const std::vector<double>& sample, const Distribution& dist,
                           std::size_t bins) {
    if (sample.size() < 5 * bins) fail(ErrorKind::TooFewSamples, "need >= 5 samples per bin");
    double n = static_cast<double>(sample.size());
    std::vector<double> counts(bins, 0.0);
    std::vector<double> edges(bins - 1);
    for (std::size_t k = 1; k < bins; ++k)
        edges[k - 1] = dist.quantile(static_cast<double>(k) / static_cast<double>(bins));
    for (double v : sample) {
        std::size_t i = static_cast<std::size_t>(
            std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
        counts[i] += 1.0;
    }
    double e = n / static_cast<double>(bins);
    double stat = 0.0;
    for (double o : counts) stat += sqr(o - e) / e;
    Chi2Result out;
    out.statistic = stat;
    out.dof = bins - 1;
    out.p_value = chi2_sf(stat, static_cast<double>(out.dof));
    return out;
}

double tv_distance_exact(const PmfTable& p, const PmfTable& q) {
    auto sorted = [](PmfTable t) {
        std::sort(t.begin(), t.end());
        return t;
    };
    PmfTable a = sorted(p), b = sorted(q);
    auto close = [](double x, double y) {
        return std::fabs(x - y) <= 1e-9 * std::max({1.0, std::fabs(x), std::fabs(y)});
    };
    double tv = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j >= b.size() || (i < a.size() && a[i].first < b[j].first && !close(a[i].first, b[j].first))) {
            tv += std::fabs(a[i].second);
            ++i;
        } else if (i >= a.size() || (b[j].first < a[i].first && !close(a[i].first, b[j].first))) {
            tv += std::fabs(b[j].second);
            ++j;
        } else {
            tv += std::fabs(a[i].second - b[j].second);
            ++i;
            ++j;
        }
    }
    return 0.5 * tv;
}

double autocorrelation(const std::vector<double>& series, std::size_t lag) {
    if (series.size() <= lag + 1) fail(ErrorKind::EmptySample, "series too short for lag");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        double d = series[i] - mean;
        den += d * d;
        if (i + lag < series.size()) num += d * (series[i + lag] - mean);
    }
    if (den == 0.0) return 0.0;  // constant series
    return num / den;
}

double marginal_p_value(const std::vector<double>& sample, const Distribution& dist) {
    if (dist.family() == DistFamily::Dirac) {
        for (double v : sample)
            if (v != dist.support_min()) return 0.0;
        return 1.0;
    }
    if (dist.discrete()) return chi2_gof_discrete(sample, dist).p_value;
    return ks_one_sample(sample, dist).p_value;
}

}  // namespace ilat
