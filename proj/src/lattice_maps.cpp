#include "ilat/lattice_maps.hpp"

#include <cmath>

#include "json.hpp"

namespace ilat {

namespace {
double relu(double t) { return t > 0.0 ? t : 0.0; }

double excess(double s, double cap) {
    if (cap == kInf) return 0.0;
    return relu(s - cap);
}
}  // namespace

const char* to_string(MapFamily f) {
    switch (f) {
        case MapFamily::udKdV: return "udKdV";
        case MapFamily::dKdV: return "dKdV";
        case MapFamily::udTodaStar: return "udTodaStar";
        case MapFamily::udToda: return "udToda";
        case MapFamily::dTodaStar: return "dTodaStar";
        case MapFamily::dToda: return "dToda";
        case MapFamily::K_udT: return "K_udT";
        case MapFamily::K_dT: return "K_dT";
        case MapFamily::R_DLPP: return "R_DLPP";
        case MapFamily::R_RPs: return "R_RPs";
        case MapFamily::R_RPe: return "R_RPe";
        case MapFamily::R_HSV: return "R_HSV";
    }
    return "?";
}

MapFamily map_family_from_string(const std::string& s) {
    static const std::map<std::string, MapFamily> lut = {
        {"udKdV", MapFamily::udKdV},         {"dKdV", MapFamily::dKdV},
        {"udTodaStar", MapFamily::udTodaStar}, {"udToda", MapFamily::udToda},
        {"dTodaStar", MapFamily::dTodaStar}, {"dToda", MapFamily::dToda},
        {"K_udT", MapFamily::K_udT},         {"K_dT", MapFamily::K_dT},
        {"R_DLPP", MapFamily::R_DLPP},       {"R_RPs", MapFamily::R_RPs},
        {"R_RPe", MapFamily::R_RPe},         {"R_HSV", MapFamily::R_HSV},
    };
    auto it = lut.find(s);
    if (it == lut.end()) fail(ErrorKind::InvalidParams, "unknown map family '" + s + "'");
    return it->second;
}

double LocalMap::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end())
        fail(ErrorKind::InvalidParams,
             std::string(to_string(family)) + " is missing parameter '" + name + "'");
    return it->second;
}

double LocalMap::param_or(const std::string& name, double fallback) const {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
}

LocalMap make_map(MapFamily family, std::initializer_list<std::pair<std::string, double>> kv) {
    LocalMap m;
    m.family = family;
    for (const auto& [k, v] : kv) m.params[k] = v;
    return m;
}

void validate(const LocalMap& map) {
    switch (map.family) {
        case MapFamily::udKdV: {
            double J = map.param("J"), K = map.param("K");
            if (std::isnan(J) || std::isnan(K) || J == -kInf || K == -kInf)
                fail(ErrorKind::InvalidParams, "udKdV requires J, K in R or +inf");
            break;
        }
        case MapFamily::dKdV: {
            double a = map.param("alpha"), ba = map.param("beta");
            if (!(a >= 0) || !(ba >= 0) || !std::isfinite(a) || !std::isfinite(ba))
                fail(ErrorKind::InvalidParams, "dKdV requires alpha, beta >= 0");
            break;
        }
        case MapFamily::R_RPe: {
            map.param("A");
            map.param("B");
            break;
        }
        case MapFamily::R_HSV: {
            double av = map.param("alpha_v"), nv = map.param("nu_v"), q = map.param("q");
            if (!(av >= 0) || !(nv >= 0 && nv < 1) || !(q >= 0 && q < 1))
                fail(ErrorKind::InvalidParams, "R_HSV requires alpha_v >= 0 and nu_v, q in [0,1)");
            double js = map.param_or("J_spin", 1.0);
            if (js != 1.0)
                fail(ErrorKind::UnsupportedRegime, "only the J_spin = 1 vertex kernel is implemented");
            break;
        }
        default: break;
    }
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

std::string LocalMap::to_json_string() const {
    nlohmann::json j;
    j["family"] = to_string(family);
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [k, v] : params) p[k] = number_or_inf(v);
    j["params"] = p;
    return j.dump();
}

LocalMap LocalMap::from_json_string(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    LocalMap m;
    m.family = map_family_from_string(j.at("family").get<std::string>());
    if (j.contains("params")) {
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
            m.params[it.key()] = parse_number_or_inf(it.value(), "params." + it.key());
        }
    }
    return m;
}

// --- primitive evaluations --------------------------------------------------

Pair udkdv_map(double J, double K, double x, double u) {
    double s = x + u;
    double over_j = excess(s, J);
    double over_k = excess(s, K);
    return {u - over_j + over_k, x - over_k + over_j};
}

Pair dkdv_map(double alpha, double beta, double x, double u) {
    if (!(x > 0.0) || !(u > 0.0)) fail(ErrorKind::DomainError, "dKdV requires x, u > 0");
    double p = x * u;
    if (p > 1e300) {
        // Rewrite with r = 1/(xu) so the products never overflow.
        double r = (1.0 / x) / u;
        return {u * (beta + r) / (alpha + r), x * (alpha + r) / (beta + r)};
    }
    return {u * (1.0 + beta * p) / (1.0 + alpha * p), x * (1.0 + alpha * p) / (1.0 + beta * p)};
}

Pair udtoda_star(double x, double u) { return {std::min(x, u), x - u}; }

Pair udtoda_star_inv(double x, double u) { return {x + relu(u), x - std::min(u, 0.0)}; }

Triple udtoda_map(double a, double b, double c) {
    double m = std::min(c, b);
    return {m, a + b - m, c + a - m};
}

Pair dtoda_star(double x, double u) {
    if (!(x > 0.0) || !(u > 0.0)) fail(ErrorKind::DomainError, "dTodaStar requires x, u > 0");
    return {x + u, x / (x + u)};
}

Pair dtoda_star_inv(double x, double u) {
    if (!(x > 0.0) || !(u > 0.0 && u < 1.0))
        fail(ErrorKind::DomainError, "dTodaStar inverse requires x > 0, u in (0,1)");
    return {x * u, x * (1.0 - u)};
}

Triple dtoda_map(double a, double b, double c) {
    if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0))
        fail(ErrorKind::DomainError, "dToda requires positive inputs");
    double s = b + c;
    return {s, a * b / s, a * c / s};
}

Pair k_udt(double a, double b) {
    double m = std::min(a, b);
    return {-m, b - a - m};
}

Pair k_dt(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) fail(ErrorKind::DomainError, "K_dT requires positive inputs");
    double s = a + b;
    return {1.0 / s, b / (a * s)};
}

// --- dispatch ----------------------------------------------------------------

Pair eval_pair_map(const LocalMap& map, double x, double u) {
    switch (map.family) {
        case MapFamily::udKdV: return udkdv_map(map.param("J"), map.param("K"), x, u);
        case MapFamily::dKdV: return dkdv_map(map.param("alpha"), map.param("beta"), x, u);
        case MapFamily::K_udT: return k_udt(x, u);
        case MapFamily::K_dT: return k_dt(x, u);
        default:
            fail(ErrorKind::UnsupportedFamily,
                 std::string(to_string(map.family)) + " is not a two-argument involution");
    }
}

Pair eval_star(const LocalMap& map, double x, double u) {
    switch (map.family) {
        case MapFamily::udTodaStar: return udtoda_star(x, u);
        case MapFamily::dTodaStar: return dtoda_star(x, u);
        default:
            fail(ErrorKind::UnsupportedFamily,
                 std::string(to_string(map.family)) + " is not a star bijection");
    }
}

Pair eval_star_inv(const LocalMap& map, double x, double u) {
    switch (map.family) {
        case MapFamily::udTodaStar: return udtoda_star_inv(x, u);
        case MapFamily::dTodaStar: return dtoda_star_inv(x, u);
        default:
            fail(ErrorKind::NotInvertible,
                 std::string(to_string(map.family)) + " has no registered inverse");
    }
}

Triple eval_triple_map(const LocalMap& map, const Triple& in) {
    switch (map.family) {
        case MapFamily::udToda: return udtoda_map(in[0], in[1], in[2]);
        case MapFamily::dToda: return dtoda_map(in[0], in[1], in[2]);
        default:
            fail(ErrorKind::UnsupportedFamily,
                 std::string(to_string(map.family)) + " is not a three-point involution");
    }
}

ThreePointMap::ThreePointMap(LocalMap star) : star_(std::move(star)) {
    if (star_.family != MapFamily::udTodaStar && star_.family != MapFamily::dTodaStar)
        fail(ErrorKind::NotInvertible,
             std::string(to_string(star_.family)) + " has no registered inverse");
}

Triple ThreePointMap::operator()(const Triple& in) const {
    Pair s = eval_star(star_, in[1], in[2]);
    Pair back = eval_star_inv(star_, in[0], s[1]);
    return {s[0], back[0], back[1]};
}

ThreePointMap three_point_involution(const LocalMap& star) { return ThreePointMap(star); }

LocalMap dual_map(const LocalMap& map) {
    switch (map.family) {
        case MapFamily::udKdV:
            return make_map(MapFamily::udKdV, {{"J", map.param("K")}, {"K", map.param("J")}});
        case MapFamily::dKdV:
            return make_map(MapFamily::dKdV,
                            {{"alpha", map.param("beta")}, {"beta", map.param("alpha")}});
        default:
            fail(ErrorKind::UnsupportedFamily,
                 std::string(to_string(map.family)) + " has no two-argument dual");
    }
}

Pair apply_symmetry(const LocalMap& map, const Symmetry& sym, double x, double u) {
    if (map.family == MapFamily::udKdV) {
        double J = map.param("J"), K = map.param("K");
        switch (sym.kind) {
            case SymmetryKind::shift: {
                double r = sym.value;
                if (r != 0.0 && (J == kInf || K == kInf))
                    fail(ErrorKind::DomainError, "shift undefined for infinite J or K");
                Pair out = udkdv_map(J - 2 * r, K - 2 * r, x - r, u - r);
                return {out[0] + r, out[1] + r};
            }
            case SymmetryKind::scale: {
                double l = sym.value;
                if (l <= 0.0 && (J == kInf || K == kInf))
                    fail(ErrorKind::DomainError, "scale by nonpositive factor with infinite parameter");
                if (l == 0.0) fail(ErrorKind::DomainError, "scale factor must be nonzero");
                return udkdv_map(l * J, l * K, l * x, l * u);
            }
            case SymmetryKind::space_particle: {
                if (J == kInf || K == kInf)
                    fail(ErrorKind::DomainError, "space-particle duality requires finite J, K");
                Pair out = udkdv_map(J, K, J - x, K - u);
                return {J - out[0], K - out[1]};
            }
        }
    }
    if (map.family == MapFamily::dKdV) {
        double a = map.param("alpha"), b = map.param("beta");
        switch (sym.kind) {
            case SymmetryKind::shift:
                fail(ErrorKind::DomainError, "shift is not a dKdV symmetry (use scale)");
            case SymmetryKind::scale: {
                double l = sym.value;
                if (!(l > 0.0)) fail(ErrorKind::DomainError, "dKdV scale factor must be positive");
                return dkdv_map(a / (l * l), b / (l * l), l * x, l * u);
            }
            case SymmetryKind::space_particle: {
                if (!(a > 0.0) || !(b > 0.0))
                    fail(ErrorKind::DomainError, "space-particle duality requires alpha, beta > 0");
                Pair out = dkdv_map(a, b, 1.0 / (a * x), 1.0 / (b * u));
                return {1.0 / (a * out[0]), 1.0 / (b * out[1])};
            }
        }
    }
    fail(ErrorKind::UnsupportedFamily, "symmetries implemented for udKdV and dKdV only");
}

double hsv_threshold(double alpha_v, double nu_v, double q, long long i, int j) {
    double qi = std::pow(q, static_cast<double>(i));
    if (j == 0) return (1.0 + alpha_v * qi) / (1.0 + alpha_v);
    return (1.0 - nu_v * qi) / (1.0 + alpha_v);
}

Pair quadrant_kernel(const LocalMap& model, double tilde_x, double x, double u) {
    switch (model.family) {
        case MapFamily::R_DLPP: {
            double m = std::min(x, u);
            return {tilde_x + x - m, tilde_x + u - m};
        }
        case MapFamily::R_RPs: {
            if (!(tilde_x > 0) || !(x > 0) || !(u > 0))
                fail(ErrorKind::DomainError, "R_RPs requires positive inputs");
            double s = x + u;
            return {tilde_x * x / s, tilde_x * u / s};
        }
        case MapFamily::R_RPe: {
            if (!(x > 0) || !(u > 0)) fail(ErrorKind::DomainError, "R_RPe requires positive b, c");
            double h = model.param("A") * tilde_x + model.param("B");
            return {tilde_x + h * x / u, h + tilde_x * u / x};
        }
        case MapFamily::R_HSV: {
            validate(model);
            long long i = std::llround(x);
            int j = static_cast<int>(std::llround(u));
            if (i < 0 || std::fabs(x - static_cast<double>(i)) > 1e-9)
                fail(ErrorKind::DomainError, "vertex occupation must be a nonnegative integer");
            if (j != 0 && j != 1) fail(ErrorKind::DomainError, "vertex input must have j in {0,1}");
            double c = hsv_threshold(model.param("alpha_v"), model.param("nu_v"), model.param("q"),
                                     i, j);
            int flip = tilde_x >= c ? 1 : 0;
            return {static_cast<double>(i + j - flip), static_cast<double>(flip)};
        }
        default:
            fail(ErrorKind::UnsupportedFamily,
                 std::string(to_string(model.family)) + " is not a quadrant kernel");
    }
}

Pair udkdv_via_k_udt(double J, double x, double u) {
    Pair fwd = {J / 2.0 - x, u - J / 2.0};
    Pair k = k_udt(fwd[0], fwd[1]);
    return {J / 2.0 - k[0], k[1] + J / 2.0};
}

Pair dkdv_via_k_dt(double alpha, double x, double u) {
    double ra = std::sqrt(alpha);
    Pair fwd = {x * ra, 1.0 / (u * ra)};
    Pair k = k_dt(fwd[0], fwd[1]);
    return {k[0] / ra, 1.0 / (k[1] * ra)};
}

}  // namespace ilat
