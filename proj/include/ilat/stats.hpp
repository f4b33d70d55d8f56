#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ilat/distributions.hpp"
#include "ilat/errors.hpp"

namespace ilat {

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double n_eff = 0.0;
};

/// Classical two-sample Kolmogorov-Smirnov test with asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// One-sample Kolmogorov-Smirnov test against an analytic cdf. Conservative
/// for discrete distributions.
KsResult ks_one_sample(std::vector<double> sample, const Distribution& dist);

struct Chi2Result {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
};

/// Pearson chi-square independence test on a quantile-binned contingency
/// table. Tied quantile edges are merged; the degrees of freedom follow the
/// realized table. Requires at least 25 * bins^2 samples.
Chi2Result chi2_independence(const std::vector<std::pair<double, double>>& pairs,
                             std::size_t bins);

/// Chi-square goodness of fit of an i.i.d. sample from a discrete
/// distribution against its exact pmf; categories with small expected counts
/// are pooled into the tail.
Chi2Result chi2_gof_discrete(const std::vector<double>& sample, const Distribution& dist);

/// Chi-square goodness of fit of a continuous sample against an analytic cdf
/// using equal-probability bins.
Chi2Result chi2_gof_binned(const std::vector<double>& sample, const Distribution& dist,
                           std::size_t bins);

using PmfTable = std::vector<std::pair<double, double>>;

/// Total variation distance (1/2) sum |p - q| between finite pmf tables;
/// support points are matched with a small absolute/relative tolerance.
double tv_distance_exact(const PmfTable& p, const PmfTable& q);

/// Lag-k sample autocorrelation.
double autocorrelation(const std::vector<double>& series, std::size_t lag);

/// Marginal agreement test: chi-square against the exact pmf for discrete
/// distributions, one-sample KS otherwise. Returns the p-value.
double marginal_p_value(const std::vector<double>& sample, const Distribution& dist);

/// Survival function of the Kolmogorov distribution.
double kolmogorov_q(double t);

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi2_sf(double statistic, double dof);

/// Two-sided normal tail probability for an autocorrelation z-score.
double normal_two_sided_p(double z);

}  // namespace ilat
