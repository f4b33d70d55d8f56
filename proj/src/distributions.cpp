#include "ilat/distributions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "json.hpp"

namespace ilat {

namespace {

constexpr double kSupportSlack = 1e-12;

bool near_integer(double x, double tol = 1e-9) { return std::fabs(x - std::llround(x)) <= tol; }

int parity(long long x) { return static_cast<int>(((x % 2) + 2) % 2); }

double require_finite(double x, const char* name) {
    if (!std::isfinite(x)) fail(ErrorKind::InvalidParams, std::string(name) + " must be finite");
    return x;
}

// Marsaglia-Tsang gamma generator, shape a >= 1, unit rate.
double gamma_mt(RngStream& rng, double a) {
    double d = a - 1.0 / 3.0;
    double cc = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + cc * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = rng.uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double gamma_sample(RngStream& rng, double shape, double rate) {
    if (shape >= 1.0) return gamma_mt(rng, shape) / rate;
    // Boost the shape by one and scale back: X_a = X_{a+1} * U^{1/a}.
    double g = gamma_mt(rng, shape + 1.0);
    double log_u = std::log(rng.uniform01()) / shape;
    double x = g * std::exp(log_u) / rate;
    if (x <= 0.0) x = std::numeric_limits<double>::min();
    return x;
}

}  // namespace

const char* to_string(DistFamily f) {
    switch (f) {
        case DistFamily::stExp: return "stExp";
        case DistFamily::sExp: return "sExp";
        case DistFamily::sstbGeo: return "sstbGeo";
        case DistFamily::ssGeo: return "ssGeo";
        case DistFamily::AL: return "AL";
        case DistFamily::sdAL: return "sdAL";
        case DistFamily::Gam: return "Gam";
        case DistFamily::IG: return "IG";
        case DistFamily::GIG: return "GIG";
        case DistFamily::Beta: return "Beta";
        case DistFamily::qNB: return "qNB";
        case DistFamily::Dirac: return "Dirac";
        case DistFamily::Uniform01: return "Uniform01";
    }
    return "?";
}

DistFamily dist_family_from_string(const std::string& s) {
    static const std::map<std::string, DistFamily> lut = {
        {"stExp", DistFamily::stExp},   {"sExp", DistFamily::sExp},
        {"sstbGeo", DistFamily::sstbGeo}, {"ssGeo", DistFamily::ssGeo},
        {"AL", DistFamily::AL},         {"sdAL", DistFamily::sdAL},
        {"Gam", DistFamily::Gam},       {"IG", DistFamily::IG},
        {"GIG", DistFamily::GIG},       {"Beta", DistFamily::Beta},
        {"qNB", DistFamily::qNB},       {"Dirac", DistFamily::Dirac},
        {"Uniform01", DistFamily::Uniform01},
    };
    auto it = lut.find(s);
    if (it == lut.end()) fail(ErrorKind::InvalidParams, "unknown distribution family '" + s + "'");
    return it->second;
}

double DistSpec::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end())
        fail(ErrorKind::InvalidParams,
             std::string(to_string(family)) + " is missing parameter '" + name + "'");
    return it->second;
}

double DistSpec::param_or(const std::string& name, double fallback) const {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
}

DistSpec make_spec(DistFamily family, std::initializer_list<std::pair<std::string, double>> kv) {
    DistSpec s;
    s.family = family;
    for (const auto& [k, v] : kv) s.params[k] = v;
    return s;
}

namespace {

nlohmann::json number_or_inf(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    return v;
}

double parse_number_or_inf(const nlohmann::json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    fail(ErrorKind::ConfigError, where + ": expected a number or \"inf\"/\"-inf\"");
}

}  // namespace

std::string DistSpec::to_json_string() const {
    nlohmann::json j;
    j["family"] = to_string(family);
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [k, v] : params) p[k] = number_or_inf(v);
    j["params"] = p;
    return j.dump();
}

DistSpec DistSpec::from_json_string(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    DistSpec s;
    s.family = dist_family_from_string(j.at("family").get<std::string>());
    if (j.contains("params")) {
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
            s.params[it.key()] = parse_number_or_inf(it.value(), "params." + it.key());
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// GIG machinery. All work happens on Y = log X, whose unnormalized log density
//   g(y) = -lambda*y - c1*exp(y) - c2*exp(-y)
// is strictly concave for c1, c2 > 0. Sampling is rejection from a five-point
// tangent hull of g; the normalizer and cdf come from quadrature of exp(g)
// restricted to the region where it is non-negligible.
// ---------------------------------------------------------------------------

struct Distribution::GigCache {
    double lam = 0, c1 = 0, c2 = 0;
    double y_mode = 0, g_mode = 0;
    double y_lo = 0, y_hi = 0;
    double log_area = 0;  // log of integral of exp(g - g_mode) over [y_lo, y_hi]

    std::array<double, 5> hy{}, hg{}, hs{};  // tangent points, values, slopes of (g - g_mode)
    std::array<double, 6> brk{};             // segment edges (brk[0] = -inf, brk[5] = +inf)
    std::array<double, 5> seg_w{};           // cumulative segment weights, seg_w[4] = total

    std::vector<double> grid_y, grid_cdf;

    double g(double y) const { return -lam * y - c1 * std::exp(y) - c2 * std::exp(-y); }
    double gp(double y) const { return -lam - c1 * std::exp(y) + c2 * std::exp(-y); }
    double ghat(double y) const { return g(y) - g_mode; }

    double hull(double y) const {
        double h = kInf;
        for (int i = 0; i < 5; ++i) h = std::min(h, hg[i] + hs[i] * (y - hy[i]));
        return h;
    }

    void build() {
        // Mode of g, computed without cancellation on either sign of lambda.
        double t_mode;
        if (lam >= 0.0) {
            t_mode = 2.0 * c2 / (lam + std::sqrt(lam * lam + 4.0 * c1 * c2));
        } else {
            t_mode = (-lam + std::sqrt(lam * lam + 4.0 * c1 * c2)) / (2.0 * c1);
        }
        y_mode = std::log(t_mode);
        g_mode = g(y_mode);

        auto drop = [&](double y) { return ghat(y) + 45.0; };  // wall at exp(-45)
        double w = 1.0 / std::sqrt(c1 * std::exp(y_mode) + c2 * std::exp(-y_mode));
        double step = std::max(w, 1e-3);
        double lo = y_mode - step;
        while (drop(lo) > 0.0) {
            step *= 2.0;
            lo = y_mode - step;
        }
        y_lo = bisect(drop, lo, y_mode, 1e-10);
        step = std::max(w, 1e-3);
        double hi = y_mode + step;
        while (drop(hi) > 0.0) {
            step *= 2.0;
            hi = y_mode + step;
        }
        y_hi = bisect(drop, y_mode, hi, 1e-10);

        // Tangent points: mode, plus the two points on each side where the log
        // density has dropped by 2. Slopes bracket zero, so the hull is proper.
        auto drop2 = [&](double y) { return ghat(y) + 2.0; };
        double yl = bisect(drop2, y_lo, y_mode, 1e-10);
        double yr = bisect(drop2, y_mode, y_hi, 1e-10);
        hy = {yl, 0.5 * (yl + y_mode), y_mode, 0.5 * (y_mode + yr), yr};
        for (int i = 0; i < 5; ++i) {
            hg[i] = ghat(hy[i]);
            hs[i] = gp(hy[i]);
        }
        hs[2] = 0.0;  // exact at the mode

        brk[0] = -kInf;
        brk[5] = kInf;
        for (int i = 0; i < 4; ++i) {
            brk[i + 1] = (hg[i + 1] - hg[i] + hs[i] * hy[i] - hs[i + 1] * hy[i + 1]) /
                         (hs[i] - hs[i + 1]);
        }

        double total = 0.0;
        for (int i = 0; i < 5; ++i) {
            total += segment_area(i);
            seg_w[i] = total;
        }

        // Normalizer: adaptive quadrature of exp(ghat) with the substitution
        // x = exp(y) already folded in.
        double rough = 0.0;
        {
            int n = 64;
            double h = (y_hi - y_lo) / n;
            for (int i = 0; i <= n; ++i) rough += std::exp(ghat(y_lo + i * h)) * h;
        }
        double area =
            integrate([&](double y) { return std::exp(ghat(y)); }, y_lo, y_hi,
                      1e-10 * std::max(rough, 1e-300));
        log_area = std::log(area);

        // Monotone cdf grid (composite Simpson on a uniform grid).
        const int n = 4096;
        grid_y.resize(n + 1);
        grid_cdf.resize(n + 1);
        double h = (y_hi - y_lo) / n;
        grid_y[0] = y_lo;
        grid_cdf[0] = 0.0;
        double prev_f = std::exp(ghat(y_lo));
        double acc = 0.0;
        for (int i = 1; i <= n; ++i) {
            double y = y_lo + i * h;
            double f = std::exp(ghat(y));
            double fm = std::exp(ghat(y - 0.5 * h));
            acc += h / 6.0 * (prev_f + 4.0 * fm + f);
            grid_y[i] = y;
            grid_cdf[i] = acc;
            prev_f = f;
        }
        for (auto& v : grid_cdf) v /= acc;
    }

    double segment_area(int i) const {
        double a = brk[i], b = brk[i + 1];
        double s = hs[i];
        auto line = [&](double y) { return hg[i] + s * (y - hy[i]); };
        if (s == 0.0) return std::exp(hg[i]) * (b - a);
        if (a == -kInf) return std::exp(line(b)) / s;
        if (b == kInf) return std::exp(line(a)) / (-s);
        double va = line(a), vb = line(b);
        // exp(vb) - exp(va) over s, stable for small slope * width.
        double m = std::max(va, vb);
        return std::exp(m) * (std::exp(vb - m) - std::exp(va - m)) / s;
    }

    double sample(RngStream& rng) const {
        for (int guard = 0; guard < 100000; ++guard) {
            double u = rng.uniform01() * seg_w[4];
            int i = 0;
            while (i < 4 && u > seg_w[i]) ++i;
            double lo_w = i == 0 ? 0.0 : seg_w[i - 1];
            double r = (u - lo_w) / (seg_w[i] - lo_w);
            double s = hs[i];
            double a = brk[i], b = brk[i + 1];
            double y;
            if (s == 0.0) {
                y = a + r * (b - a);
            } else if (a == -kInf) {
                y = b + std::log(r) / s;  // s > 0
            } else if (b == kInf) {
                y = a + std::log1p(-r) / s;  // s < 0, log(1-r)/s > 0
            } else {
                // Invert the truncated exponential on [a, b].
                double z = s * (b - a);
                y = a + std::log1p(r * std::expm1(z)) / s;
            }
            double h = hg[i] + s * (y - hy[i]);
            if (std::log(rng.uniform01()) <= ghat(y) - h) return std::exp(y);
        }
        fail(ErrorKind::NotConverged, "GIG rejection sampler failed to accept");
    }

    double cdf_logx(double y) const {
        if (y <= y_lo) return 0.0;
        if (y >= y_hi) return 1.0;
        auto it = std::upper_bound(grid_y.begin(), grid_y.end(), y);
        std::size_t i = static_cast<std::size_t>(it - grid_y.begin());
        double y0 = grid_y[i - 1], y1 = grid_y[i];
        double f0 = grid_cdf[i - 1], f1 = grid_cdf[i];
        return f0 + (f1 - f0) * (y - y0) / (y1 - y0);
    }

    double mean_log() const {
        double m = integrate([&](double y) { return y * std::exp(ghat(y)); }, y_lo, y_hi,
                             1e-10 * std::max(std::fabs(y_lo) + std::fabs(y_hi), 1.0));
        return m / std::exp(log_area);
    }
};

// ---------------------------------------------------------------------------
// Distribution
// ---------------------------------------------------------------------------

Distribution::Distribution(DistSpec spec) : spec_(std::move(spec)) { validate_and_prepare(); }
Distribution::~Distribution() = default;
Distribution::Distribution(Distribution&&) noexcept = default;
Distribution& Distribution::operator=(Distribution&&) noexcept = default;

void Distribution::validate_and_prepare() {
    switch (spec_.family) {
        case DistFamily::stExp: {
            a_ = require_finite(spec_.param("lambda"), "lambda");
            b_ = require_finite(spec_.param("c1"), "c1");
            c_ = spec_.param("c2");
            if (!(b_ < c_)) fail(ErrorKind::InvalidParams, "stExp requires c1 < c2");
            if (c_ == kInf && !(a_ > 0))
                fail(ErrorKind::InvalidParams, "stExp with c2 = inf requires lambda > 0");
            support_min_ = b_;
            support_max_ = c_;
            if (c_ == kInf) {
                log_z_ = -a_ * b_ - std::log(a_);
            } else if (std::fabs(a_ * (c_ - b_)) < 1e-12) {
                log_z_ = std::log(c_ - b_);
            } else {
                log_z_ = -a_ * b_ + std::log(-std::expm1(-a_ * (c_ - b_)) / a_);
            }
            break;
        }
        case DistFamily::sExp: {
            a_ = require_finite(spec_.param("lambda"), "lambda");
            b_ = require_finite(spec_.param("c"), "c");
            if (!(a_ > 0)) fail(ErrorKind::InvalidParams, "sExp requires lambda > 0");
            support_min_ = b_;
            support_max_ = kInf;
            log_z_ = -a_ * b_ - std::log(a_);
            break;
        }
        case DistFamily::sstbGeo:
        case DistFamily::ssGeo: {
            a_ = spec_.param("theta");
            b_ = spec_.param("M");
            c_ = spec_.family == DistFamily::ssGeo ? kInf : spec_.param("N");
            d_ = spec_.family == DistFamily::ssGeo ? 1.0 : spec_.param("kappa");
            e_ = spec_.param("m");
            if (!(a_ > 0)) fail(ErrorKind::InvalidParams, "theta must be > 0");
            if (!(d_ > 0)) fail(ErrorKind::InvalidParams, "kappa must be > 0");
            if (!(e_ > 0)) fail(ErrorKind::InvalidParams, "m must be > 0");
            if (!near_integer(b_)) fail(ErrorKind::InvalidParams, "M must be an integer");
            if (c_ != kInf && !near_integer(c_)) fail(ErrorKind::InvalidParams, "N must be an integer");
            if (!(b_ <= c_)) fail(ErrorKind::InvalidParams, "M <= N required");
            if (c_ == kInf && !(a_ < 1))
                fail(ErrorKind::InvalidParams, "theta < 1 required for infinite support");
            if (spec_.family == DistFamily::ssGeo && !(a_ < 1))
                fail(ErrorKind::InvalidParams, "ssGeo requires theta < 1");
            support_min_ = e_ * b_;
            support_max_ = c_ == kInf ? kInf : e_ * c_;
            if (c_ != kInf) {
                long long M = std::llround(b_), N = std::llround(c_);
                if (N - M > (1LL << 22)) fail(ErrorKind::TooLarge, "sstbGeo support too large");
                double z = 0;
                table_x_.clear();
                table_p_.clear();
                for (long long x = M; x <= N; ++x) {
                    double w = std::pow(a_, static_cast<double>(x)) *
                               (parity(x) ? d_ : 1.0);
                    table_x_.push_back(e_ * static_cast<double>(x));
                    table_p_.push_back(w);
                    z += w;
                }
                table_cum_.clear();
                double acc = 0;
                for (auto& p : table_p_) {
                    p /= z;
                    acc += p;
                    table_cum_.push_back(acc);
                }
                log_z_ = std::log(z);
            } else {
                long long M = std::llround(b_);
                double wM = std::pow(a_, static_cast<double>(M)) * (parity(M) ? d_ : 1.0);
                double wM1 = std::pow(a_, static_cast<double>(M + 1)) * (parity(M + 1) ? d_ : 1.0);
                log_z_ = std::log((wM + wM1) / (1.0 - a_ * a_));
            }
            break;
        }
        case DistFamily::AL: {
            a_ = spec_.param("lambda1");
            b_ = spec_.param("lambda2");
            if (!(a_ > 0 && b_ > 0)) fail(ErrorKind::InvalidParams, "AL requires lambda1, lambda2 > 0");
            log_z_ = std::log(1.0 / a_ + 1.0 / b_);
            support_min_ = -kInf;
            support_max_ = kInf;
            break;
        }
        case DistFamily::sdAL: {
            a_ = spec_.param("theta1");
            b_ = spec_.param("theta2");
            e_ = spec_.param("m");
            if (!(a_ > 0 && a_ < 1 && b_ > 0 && b_ < 1))
                fail(ErrorKind::InvalidParams, "sdAL requires theta1, theta2 in (0,1)");
            if (!(e_ > 0)) fail(ErrorKind::InvalidParams, "m must be > 0");
            log_z_ = std::log(1.0 / (1.0 - a_) + b_ / (1.0 - b_));
            support_min_ = -kInf;
            support_max_ = kInf;
            break;
        }
        case DistFamily::Gam: {
            a_ = spec_.param("lambda");
            b_ = spec_.param("c");
            if (!(a_ > 0 && b_ > 0)) fail(ErrorKind::InvalidParams, "Gam requires lambda, c > 0");
            log_z_ = std::lgamma(a_) - a_ * std::log(b_);
            support_min_ = 0.0;
            support_max_ = kInf;
            break;
        }
        case DistFamily::IG: {
            a_ = spec_.param("lambda");
            b_ = spec_.param("c");
            if (!(a_ > 0 && b_ > 0)) fail(ErrorKind::InvalidParams, "IG requires lambda, c > 0");
            log_z_ = std::lgamma(a_) - a_ * std::log(b_);
            support_min_ = 0.0;
            support_max_ = kInf;
            break;
        }
        case DistFamily::GIG: {
            a_ = require_finite(spec_.param("lambda"), "lambda");
            b_ = spec_.param("c1");
            c_ = spec_.param("c2");
            if (!(b_ >= 0 && c_ > 0)) fail(ErrorKind::InvalidParams, "GIG requires c1 >= 0, c2 > 0");
            support_min_ = 0.0;
            support_max_ = kInf;
            if (b_ == 0.0) {
                // Convention GIG(lambda, 0, c) = IG(lambda, c).
                if (!(a_ > 0)) fail(ErrorKind::InvalidParams, "GIG with c1 = 0 requires lambda > 0");
                d_ = 1.0;
                log_z_ = std::lgamma(a_) - a_ * std::log(c_);
            } else {
                d_ = 0.0;
                gig_ = std::make_unique<GigCache>();
                gig_->lam = a_;
                gig_->c1 = b_;
                gig_->c2 = c_;
                gig_->build();
            }
            break;
        }
        case DistFamily::Beta: {
            a_ = spec_.param("lambda1");
            b_ = spec_.param("lambda2");
            if (!(a_ > 0 && b_ > 0)) fail(ErrorKind::InvalidParams, "Beta requires lambda1, lambda2 > 0");
            log_z_ = std::lgamma(a_) + std::lgamma(b_) - std::lgamma(a_ + b_);
            support_min_ = 0.0;
            support_max_ = 1.0;
            break;
        }
        case DistFamily::qNB: {
            a_ = spec_.param("b");
            b_ = spec_.param("p");
            c_ = spec_.param("q");
            if (!(c_ >= 0 && c_ < 1)) fail(ErrorKind::InvalidParams, "qNB requires q in [0,1)");
            d_ = -1.0;
            if (b_ < 0) {
                // Finite support: b = q^{-L} for an integer L >= 0.
                long long L = -1;
                if (a_ == 1.0) {
                    L = 0;
                } else if (c_ > 0) {
                    double l = -std::log(a_) / std::log(c_);
                    if (near_integer(l, 1e-6) && l >= -1e-9) L = std::llround(l);
                }
                if (L < 0)
                    fail(ErrorKind::InvalidParams, "qNB with p < 0 requires b = q^-L, integer L >= 0");
                d_ = static_cast<double>(L);
                // Exact table over {0, ..., L}.
                table_x_.clear();
                table_p_.clear();
                double term = 1.0, z = 1.0;
                table_x_.push_back(0);
                table_p_.push_back(1.0);
                for (long long n = 1; n <= L; ++n) {
                    double qn1 = std::pow(c_, static_cast<double>(n - 1));
                    term *= b_ * (1.0 - a_ * qn1) / (1.0 - std::pow(c_, static_cast<double>(n)));
                    table_x_.push_back(static_cast<double>(n));
                    table_p_.push_back(term);
                    z += term;
                }
                table_cum_.clear();
                double acc = 0;
                for (auto& p : table_p_) {
                    p /= z;
                    acc += p;
                    table_cum_.push_back(acc);
                }
                log_z_ = std::log(z);
                support_min_ = 0;
                support_max_ = static_cast<double>(L);
            } else {
                if (!(b_ >= 0 && b_ < 1 && a_ >= 0 && a_ < 1))
                    fail(ErrorKind::InvalidParams, "qNB requires p, b in [0,1) (or p < 0, b = q^-L)");
                // Z = (pb; q)_inf / (p; q)_inf by the q-binomial theorem.
                double lz = 0.0;
                double qk = 1.0;
                for (int k = 0; k < 4000; ++k) {
                    lz += std::log1p(-b_ * a_ * qk) - std::log1p(-b_ * qk);
                    qk *= c_;
                    if (qk < 1e-20) break;
                }
                log_z_ = lz;
                support_min_ = 0;
                support_max_ = kInf;
            }
            break;
        }
        case DistFamily::Dirac: {
            a_ = require_finite(spec_.param("a"), "a");
            support_min_ = support_max_ = a_;
            table_x_ = {a_};
            table_p_ = {1.0};
            table_cum_ = {1.0};
            break;
        }
        case DistFamily::Uniform01: {
            support_min_ = 0.0;
            support_max_ = 1.0;
            break;
        }
    }
}

bool Distribution::discrete() const {
    switch (spec_.family) {
        case DistFamily::sstbGeo:
        case DistFamily::ssGeo:
        case DistFamily::sdAL:
        case DistFamily::qNB:
        case DistFamily::Dirac: return true;
        default: return false;
    }
}

bool Distribution::finite_support() const {
    switch (spec_.family) {
        case DistFamily::sstbGeo: return c_ != kInf;
        case DistFamily::qNB: return d_ >= 0;
        case DistFamily::Dirac: return true;
        default: return false;
    }
}

double Distribution::sample(RngStream& rng) const {
    switch (spec_.family) {
        case DistFamily::stExp: {
            double u = rng.uniform01();
            if (c_ == kInf) return b_ - std::log1p(-u) / a_;
            double z = a_ * (c_ - b_);
            if (std::fabs(z) < 1e-12) return b_ + u * (c_ - b_);
            return b_ - std::log1p(u * std::expm1(-z)) / a_;
        }
        case DistFamily::sExp: return b_ - std::log1p(-rng.uniform01()) / a_;
        case DistFamily::sstbGeo:
        case DistFamily::ssGeo: {
            if (!table_cum_.empty()) {
                double u = rng.uniform01();
                auto it = std::lower_bound(table_cum_.begin(), table_cum_.end(), u);
                std::size_t i = std::min<std::size_t>(it - table_cum_.begin(), table_x_.size() - 1);
                return table_x_[i];
            }
            long long M = std::llround(b_);
            double wM = parity(M) ? d_ : 1.0;
            double wM1 = a_ * (parity(M + 1) ? d_ : 1.0);
            double pe = wM / (wM + wM1);
            double u = rng.uniform01();
            long long off = 0;
            if (u >= pe) off = 1;
            long long k = static_cast<long long>(std::floor(std::log(rng.uniform01()) /
                                                            (2.0 * std::log(a_))));
            return e_ * static_cast<double>(M + off + 2 * k);
        }
        case DistFamily::AL: {
            double u = rng.uniform01();
            double z = std::exp(log_z_);
            double w_neg = (1.0 / b_) / z;
            if (u < w_neg) return std::log(u * b_ * z) / b_;
            return -std::log1p(-(u - w_neg) * a_ * z) / a_;
        }
        case DistFamily::sdAL: {
            double z = std::exp(log_z_);
            double w_neg = (b_ / (1.0 - b_)) / z;
            double u = rng.uniform01();
            if (u < w_neg) {
                long long k = static_cast<long long>(std::floor(std::log(rng.uniform01()) /
                                                                std::log(b_)));
                return -e_ * static_cast<double>(k + 1);
            }
            long long k = static_cast<long long>(std::floor(std::log(rng.uniform01()) /
                                                            std::log(a_)));
            return e_ * static_cast<double>(k);
        }
        case DistFamily::Gam: return gamma_sample(rng, a_, b_);
        case DistFamily::IG: return 1.0 / gamma_sample(rng, a_, b_);
        case DistFamily::GIG:
            if (d_ == 1.0) return 1.0 / gamma_sample(rng, a_, c_);
            return gig_->sample(rng);
        case DistFamily::Beta: {
            double g1 = gamma_sample(rng, a_, 1.0);
            double g2 = gamma_sample(rng, b_, 1.0);
            return g1 / (g1 + g2);
        }
        case DistFamily::qNB: {
            if (!table_cum_.empty()) {
                double u = rng.uniform01();
                auto it = std::lower_bound(table_cum_.begin(), table_cum_.end(), u);
                std::size_t i = std::min<std::size_t>(it - table_cum_.begin(), table_x_.size() - 1);
                return table_x_[i];
            }
            double u = rng.uniform01();
            double term = std::exp(-log_z_);
            double cum = term;
            long long n = 0;
            while (u > cum && cum < 1.0 - 1e-12) {
                n += 1;
                double qn1 = std::pow(c_, static_cast<double>(n - 1));
                double qn = qn1 * c_;
                term *= b_ * (1.0 - a_ * qn1) / (1.0 - qn);
                cum += term;
            }
            return static_cast<double>(n);
        }
        case DistFamily::Dirac: return a_;
        case DistFamily::Uniform01: return rng.uniform01();
    }
    fail(ErrorKind::UnsupportedFamily, "sample");
}

std::vector<double> Distribution::sample_n(RngStream& rng, std::size_t n) const {
    if (n < 1) fail(ErrorKind::InvalidParams, "sample count must be >= 1");
    std::vector<double> out(n);
    for (auto& v : out) v = sample(rng);
    return out;
}

namespace {
// Locate x on the lattice m*Z; returns false when x is not a support point.
bool lattice_index(double x, double m, long long& idx) {
    double t = x / m;
    if (!near_integer(t, 1e-9 * std::max(1.0, std::fabs(t)))) return false;
    idx = std::llround(t);
    return true;
}
}  // namespace

double Distribution::density(double x) const {
    switch (spec_.family) {
        case DistFamily::stExp:
            if (x < b_ - kSupportSlack || x > c_ + kSupportSlack) return 0.0;
            return std::exp(-a_ * x - log_z_);
        case DistFamily::sExp:
            if (x < b_ - kSupportSlack) return 0.0;
            return std::exp(-a_ * x - log_z_);
        case DistFamily::sstbGeo:
        case DistFamily::ssGeo: {
            long long idx;
            if (!lattice_index(x, e_, idx)) return 0.0;
            if (idx < std::llround(b_) || (c_ != kInf && idx > std::llround(c_))) return 0.0;
            double lw = static_cast<double>(idx) * std::log(a_) + (parity(idx) ? std::log(d_) : 0.0);
            return std::exp(lw - log_z_);
        }
        case DistFamily::AL:
            return std::exp((x >= 0 ? -a_ * x : b_ * x) - log_z_);
        case DistFamily::sdAL: {
            long long idx;
            if (!lattice_index(x, e_, idx)) return 0.0;
            double lw = idx >= 0 ? idx * std::log(a_) : -idx * std::log(b_);
            return std::exp(lw - log_z_);
        }
        case DistFamily::Gam:
            if (x <= 0) return 0.0;
            return std::exp((a_ - 1.0) * std::log(x) - b_ * x - log_z_);
        case DistFamily::IG:
            if (x <= 0) return 0.0;
            return std::exp((-a_ - 1.0) * std::log(x) - b_ / x - log_z_);
        case DistFamily::GIG: {
            if (x <= 0) return 0.0;
            if (d_ == 1.0) return std::exp((-a_ - 1.0) * std::log(x) - c_ / x - log_z_);
            double y = std::log(x);
            return std::exp(gig_->ghat(y) - y - gig_->log_area);
        }
        case DistFamily::Beta:
            if (x <= 0 || x >= 1) return 0.0;
            return std::exp((a_ - 1.0) * std::log(x) + (b_ - 1.0) * std::log1p(-x) - log_z_);
        case DistFamily::qNB: {
            long long n;
            if (!lattice_index(x, 1.0, n) || n < 0) return 0.0;
            if (d_ >= 0) {
                if (n > std::llround(d_)) return 0.0;
                return table_p_[static_cast<std::size_t>(n)];
            }
            double term = std::exp(-log_z_);
            for (long long k = 1; k <= n; ++k) {
                double qk1 = std::pow(c_, static_cast<double>(k - 1));
                term *= b_ * (1.0 - a_ * qk1) / (1.0 - qk1 * c_);
            }
            return term;
        }
        case DistFamily::Dirac: return std::fabs(x - a_) <= 1e-12 * std::max(1.0, std::fabs(a_)) ? 1.0 : 0.0;
        case DistFamily::Uniform01: return (x >= -kSupportSlack && x <= 1 + kSupportSlack) ? 1.0 : 0.0;
    }
    fail(ErrorKind::UnsupportedFamily, "density");
}

double Distribution::cdf(double x) const {
    switch (spec_.family) {
        case DistFamily::stExp: {
            if (x <= b_) return 0.0;
            if (x >= c_) return 1.0;
            if (c_ == kInf) return -std::expm1(-a_ * (x - b_));
            double z = a_ * (c_ - b_);
            if (std::fabs(z) < 1e-12) return (x - b_) / (c_ - b_);
            return std::expm1(-a_ * (x - b_)) / std::expm1(-z);
        }
        case DistFamily::sExp:
            return x <= b_ ? 0.0 : -std::expm1(-a_ * (x - b_));
        case DistFamily::sstbGeo:
        case DistFamily::ssGeo: {
            long long M = std::llround(b_);
            long long x_idx = static_cast<long long>(std::floor(x / e_ + 1e-9));
            if (x_idx < M) return 0.0;
            if (c_ != kInf && x_idx >= std::llround(c_))
                return 1.0;
            if (!table_cum_.empty())
                return table_cum_[static_cast<std::size_t>(x_idx - M)];
            // Closed-form partial sums over the two parity classes.
            auto geo_partial = [&](long long first, long long last) {
                if (last < first) return 0.0;
                long long cnt = (last - first) / 2 + 1;
                double r2 = a_ * a_;
                double lead = std::pow(a_, static_cast<double>(first));
                return lead * (1.0 - std::pow(r2, static_cast<double>(cnt))) / (1.0 - r2) *
                       (parity(first) ? d_ : 1.0);
            };
            long long lastA = x_idx - ((x_idx - M) % 2);
            long long lastB = x_idx - ((x_idx - M + 1) % 2);
            double cum = geo_partial(M, lastA) + geo_partial(M + 1, lastB);
            return std::min(1.0, cum / std::exp(log_z_));
        }
        case DistFamily::AL: {
            double z = std::exp(log_z_);
            if (x < 0) return std::exp(b_ * x) / (b_ * z);
            return (1.0 / b_ - std::expm1(-a_ * x) / a_) / z;
        }
        case DistFamily::sdAL: {
            double z = std::exp(log_z_);
            long long x_idx = static_cast<long long>(std::floor(x / e_ + 1e-9));
            if (x_idx < 0) return std::pow(b_, static_cast<double>(-x_idx)) / (1.0 - b_) / z;
            double neg = b_ / (1.0 - b_);
            double pos = (1.0 - std::pow(a_, static_cast<double>(x_idx + 1))) / (1.0 - a_);
            return (neg + pos) / z;
        }
        case DistFamily::Gam:
            if (x <= 0) return 0.0;
            return boost::math::gamma_p(a_, b_ * x);
        case DistFamily::IG:
            if (x <= 0) return 0.0;
            return boost::math::gamma_q(a_, b_ / x);
        case DistFamily::GIG:
            if (x <= 0) return 0.0;
            if (d_ == 1.0) return boost::math::gamma_q(a_, c_ / x);
            return gig_->cdf_logx(std::log(x));
        case DistFamily::Beta:
            if (x <= 0) return 0.0;
            if (x >= 1) return 1.0;
            return boost::math::ibeta(a_, b_, x);
        case DistFamily::qNB: {
            long long n = static_cast<long long>(std::floor(x + 1e-9));
            if (n < 0) return 0.0;
            if (!table_cum_.empty())
                return n >= static_cast<long long>(table_cum_.size())
                           ? 1.0
                           : table_cum_[static_cast<std::size_t>(n)];
            double term = std::exp(-log_z_);
            double cum = term;
            for (long long k = 1; k <= n; ++k) {
                double qk1 = std::pow(c_, static_cast<double>(k - 1));
                term *= b_ * (1.0 - a_ * qk1) / (1.0 - qk1 * c_);
                cum += term;
            }
            return std::min(1.0, cum);
        }
        case DistFamily::Dirac: return x >= a_ ? 1.0 : 0.0;
        case DistFamily::Uniform01: return std::clamp(x, 0.0, 1.0);
    }
    fail(ErrorKind::UnsupportedFamily, "cdf");
}

double Distribution::quantile(double u) const {
    if (!(u > 0 && u < 1)) fail(ErrorKind::DomainError, "quantile argument must be in (0,1)");
    if (discrete()) {
        if (!table_cum_.empty()) {
            auto it = std::lower_bound(table_cum_.begin(), table_cum_.end(), u);
            std::size_t i = std::min<std::size_t>(it - table_cum_.begin(), table_x_.size() - 1);
            return table_x_[i];
        }
        // Walk the lattice.
        double lo = support_min_ == -kInf ? 0.0 : support_min_;
        double step = spec_.family == DistFamily::qNB ? 1.0 : e_;
        double x = lo;
        if (support_min_ == -kInf) {
            while (cdf(x - step) >= u) x -= step;
        }
        for (long long guard = 0; guard < 100000000; ++guard) {
            if (cdf(x) >= u) return x;
            x += step;
        }
        fail(ErrorKind::NotConverged, "discrete quantile walk");
    }
    double lo = support_min_, hi = support_max_;
    if (lo == -kInf) {
        lo = std::min(0.0, hi == kInf ? 0.0 : hi) - 1.0;
        while (cdf(lo) > u) lo = lo * 2.0 - 1.0;
    }
    if (hi == kInf) {
        hi = std::max(lo, 0.0) + 1.0;
        while (cdf(hi) < u) hi = hi * 2.0 + 1.0;
    }
    return bisect([&](double x) { return cdf(x) - u; }, lo, hi, 1e-12);
}

double Distribution::mean_log() const {
    switch (spec_.family) {
        case DistFamily::Gam: return boost::math::digamma(a_) - std::log(b_);
        case DistFamily::IG: return std::log(b_) - boost::math::digamma(a_);
        case DistFamily::GIG:
            if (d_ == 1.0) return std::log(c_) - boost::math::digamma(a_);
            return gig_->mean_log();
        case DistFamily::Beta: return boost::math::digamma(a_) - boost::math::digamma(a_ + b_);
        default: break;
    }
    if (support_min_ < 0)
        fail(ErrorKind::DomainError, "mean_log requires a nonnegative support");
    if (discrete()) {
        double acc = 0.0, mass = 0.0;
        for (const auto& [x, p] : exact_pmf_table()) {
            if (x <= 0) fail(ErrorKind::DomainError, "mean_log with mass at 0");
            acc += p * std::log(x);
            mass += p;
        }
        return acc / mass;
    }
    fail(ErrorKind::UnsupportedFamily, "mean_log not implemented for this family");
}

double Distribution::mean() const {
    switch (spec_.family) {
        case DistFamily::Dirac: return a_;
        case DistFamily::Uniform01: return 0.5;
        case DistFamily::Gam: return a_ / b_;
        case DistFamily::Beta: return a_ / (a_ + b_);
        default: break;
    }
    if (discrete()) {
        if (finite_support()) {
            double acc = 0.0;
            for (std::size_t i = 0; i < table_x_.size(); ++i) acc += table_x_[i] * table_p_[i];
            return acc;
        }
        // Walk outward from the median until the remaining tail mass is tiny.
        double acc = 0.0;
        double step = spec_.family == DistFamily::qNB ? 1.0 : e_;
        double lo = quantile(1e-13), hi = quantile(1.0 - 1e-13);
        for (double x = lo; x <= hi + 0.5 * step; x += step) acc += x * density(x);
        return acc;
    }
    double lo = support_min_ == -kInf ? quantile(1e-12) : support_min_;
    double hi = support_max_ == kInf ? quantile(1.0 - 1e-12) : support_max_;
    return integrate([&](double x) { return x * density(x); }, lo, hi,
                     1e-10 * std::max(1.0, std::fabs(hi - lo)));
}

std::vector<std::pair<double, double>> Distribution::exact_pmf_table() const {
    if (!finite_support())
        fail(ErrorKind::InfiniteSupport, std::string(to_string(spec_.family)) +
                                             " does not have finite support here");
    std::vector<std::pair<double, double>> out;
    out.reserve(table_x_.size());
    for (std::size_t i = 0; i < table_x_.size(); ++i) out.emplace_back(table_x_[i], table_p_[i]);
    return out;
}

std::vector<double> sample(const DistSpec& spec, RngStream& rng, std::size_t n) {
    return Distribution(spec).sample_n(rng, n);
}

double density(const DistSpec& spec, double x) { return Distribution(spec).density(x); }

std::vector<std::pair<double, double>> exact_pmf_table(const DistSpec& spec) {
    return Distribution(spec).exact_pmf_table();
}

}  // namespace ilat
