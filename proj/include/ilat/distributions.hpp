#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ilat/errors.hpp"
#include "ilat/numeric.hpp"
#include "ilat/rng.hpp"

namespace ilat {

enum class DistFamily {
    stExp,      // shifted truncated exponential on [c1, c2]
    sExp,       // shifted exponential on [c, inf)
    sstbGeo,    // shifted scaled (truncated bipartite) geometric
    ssGeo,      // shifted scaled geometric
    AL,         // asymmetric Laplace
    sdAL,       // scaled discrete asymmetric Laplace
    Gam,        // gamma, rate parameterization
    IG,         // inverse gamma
    GIG,        // generalized inverse Gaussian
    Beta,       // beta
    qNB,        // q-negative binomial
    Dirac,      // point mass
    Uniform01,  // uniform on (0, 1)
};

const char* to_string(DistFamily f);
DistFamily dist_family_from_string(const std::string& s);

/// Tagged parametric description of a distribution: a family plus named parameters.
///
/// Parameter names: stExp(lambda, c1, c2); sExp(lambda, c); sstbGeo(theta, M, N,
/// kappa, m) where theta is the geometric ratio; ssGeo(theta, M, m); AL(lambda1,
/// lambda2); sdAL(theta1, theta2, m); Gam/IG(lambda, c); GIG(lambda, c1, c2);
/// Beta(lambda1, lambda2); qNB(b, p, q); Dirac(a). Infinite values are permitted
/// where noted and serialize as the JSON strings "inf"/"-inf".
struct DistSpec {
    DistFamily family = DistFamily::Uniform01;
    std::map<std::string, double> params;

    double param(const std::string& name) const;
    double param_or(const std::string& name, double fallback) const;

    std::string to_json_string() const;
    static DistSpec from_json_string(const std::string& text);

    bool operator==(const DistSpec& other) const = default;
};

DistSpec make_spec(DistFamily family, std::initializer_list<std::pair<std::string, double>> kv);

/// A validated distribution with cached normalizers, ready for sampling and
/// evaluation. Construction throws InvalidParams when the spec violates its
/// parameter domain. All methods are const and reentrant; randomness comes
/// only from the caller's stream.
class Distribution {
  public:
    explicit Distribution(DistSpec spec);
    ~Distribution();
    Distribution(Distribution&&) noexcept;
    Distribution& operator=(Distribution&&) noexcept;
    Distribution(const Distribution&) = delete;
    Distribution& operator=(const Distribution&) = delete;

    const DistSpec& spec() const { return spec_; }
    DistFamily family() const { return spec_.family; }
    bool discrete() const;
    bool finite_support() const;

    double support_min() const { return support_min_; }
    double support_max() const { return support_max_; }

    double sample(RngStream& rng) const;
    std::vector<double> sample_n(RngStream& rng, std::size_t n) const;

    /// Normalized density (continuous families) or pmf (discrete families).
    /// Zero outside the support; lattice points of discrete families are
    /// matched with a small absolute/relative slack.
    double density(double x) const;

    double cdf(double x) const;

    /// Numeric quantile (bisection on the cdf for continuous families,
    /// support walk for discrete ones).
    double quantile(double u) const;

    /// E[log X] for positive-support families (used by carrier prechecks).
    double mean_log() const;

    /// E[X], numeric where no closed form is kept.
    double mean() const;

    /// Full pmf for finite-support discrete families, sorted by support point.
    /// Throws InfiniteSupport otherwise.
    std::vector<std::pair<double, double>> exact_pmf_table() const;

  private:
    struct GigCache;
    void validate_and_prepare();

    DistSpec spec_;
    double support_min_ = -kInf;
    double support_max_ = kInf;

    // Cached per-family quantities (see distributions.cpp).
    double a_ = 0, b_ = 0, c_ = 0, d_ = 0, e_ = 0;
    double log_z_ = 0;
    std::vector<double> table_x_, table_p_, table_cum_;
    std::unique_ptr<GigCache> gig_;
};

// Spec-level convenience wrappers matching the operation signatures.
std::vector<double> sample(const DistSpec& spec, RngStream& rng, std::size_t n);
double density(const DistSpec& spec, double x);
std::vector<std::pair<double, double>> exact_pmf_table(const DistSpec& spec);

}  // namespace ilat
