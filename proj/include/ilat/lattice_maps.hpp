#pragma once

#include <array>
#include <map>
#include <string>

#include "ilat/errors.hpp"
#include "ilat/numeric.hpp"

namespace ilat {

enum class MapFamily {
    udKdV,       // box-ball style max-plus involution, parameters J, K
    dKdV,        // rational involution, parameters alpha, beta
    udTodaStar,  // (x,u) -> (min{x,u}, x-u)
    udToda,      // three-point max-plus involution
    dTodaStar,   // (x,u) -> (x+u, x/(x+u))
    dToda,       // three-point rational involution
    K_udT,       // udToda restricted to the a+b=0 slice
    K_dT,        // dToda restricted to the ab=1 slice
    R_DLPP,      // last passage percolation increment kernel
    R_RPs,       // site-weight polymer increment kernel
    R_RPe,       // edge-weight polymer increment kernel, h(x)=A*x+B
    R_HSV,       // stochastic vertex kernel driven by a uniform variable
};

const char* to_string(MapFamily f);
MapFamily map_family_from_string(const std::string& s);

/// Tagged description of one local lattice map together with its parameters.
/// Parameter names: udKdV(J, K) with "inf" allowed; dKdV(alpha, beta);
/// R_RPe(A, B); R_HSV(alpha_v, nu_v, q, J_spin).
struct LocalMap {
    MapFamily family = MapFamily::udKdV;
    std::map<std::string, double> params;

    double param(const std::string& name) const;
    double param_or(const std::string& name, double fallback) const;

    std::string to_json_string() const;
    static LocalMap from_json_string(const std::string& text);

    bool operator==(const LocalMap& other) const = default;
};

LocalMap make_map(MapFamily family, std::initializer_list<std::pair<std::string, double>> kv);
void validate(const LocalMap& map);

using Pair = std::array<double, 2>;
using Triple = std::array<double, 3>;

// --- primitive map evaluations -------------------------------------------

/// Max-plus two-point map; J and/or K may be +infinity, in which case the
/// corresponding max{x+u-.,0} term is zero. Conserves x+u.
Pair udkdv_map(double J, double K, double x, double u);

/// Rational two-point map on (0,inf)^2; conserves x*u and
/// alpha*x + 1/x + beta*u + 1/u. Throws DomainError off (0,inf)^2.
Pair dkdv_map(double alpha, double beta, double x, double u);

Pair udtoda_star(double x, double u);
Pair udtoda_star_inv(double x, double u);
Triple udtoda_map(double a, double b, double c);

Pair dtoda_star(double x, double u);
Pair dtoda_star_inv(double x, double u);
Triple dtoda_map(double a, double b, double c);

Pair k_udt(double a, double b);
Pair k_dt(double a, double b);

// --- LocalMap-level dispatch ----------------------------------------------

/// Evaluate a two-argument involution family (udKdV, dKdV, K_udT, K_dT).
Pair eval_pair_map(const LocalMap& map, double x, double u);

/// Evaluate a star bijection (udTodaStar, dTodaStar) or its inverse.
Pair eval_star(const LocalMap& map, double x, double u);
Pair eval_star_inv(const LocalMap& map, double x, double u);

/// Evaluate a three-point involution family (udToda, dToda).
Triple eval_triple_map(const LocalMap& map, const Triple& in);

/// The involution (a,b,c) -> (star^(1)(b,c), star^-1(a, star^(2)(b,c)))
/// assembled from a star bijection with a registered inverse.
class ThreePointMap {
  public:
    explicit ThreePointMap(LocalMap star);
    Triple operator()(const Triple& in) const;
    const LocalMap& star() const { return star_; }

  private:
    LocalMap star_;
};

ThreePointMap three_point_involution(const LocalMap& star);

/// pi . F . pi for a two-argument family; equals the same family with
/// parameters swapped (J<->K, alpha<->beta).
LocalMap dual_map(const LocalMap& map);

enum class SymmetryKind { shift, scale, space_particle };
struct Symmetry {
    SymmetryKind kind;
    double value = 0.0;  // r for shift, lambda for scale; unused otherwise
};

/// Evaluate the symmetry-conjugated map at (x,u):
///   shift(r):        F^{(J-2r,K-2r)}(x-r,u-r) + (r,r)            (udKdV only)
///   scale(l):        F^{(lJ,lK)}(lx,lu)  /  F^{(a/l^2,b/l^2)}(lx,lu)
///   space_particle:  sigma . F . sigma
/// The conjugation identities make the first and third agree with the plain
/// map, and the second equal l * F(x,u) (udKdV) resp. l * F(x,u) (dKdV).
Pair apply_symmetry(const LocalMap& map, const Symmetry& sym, double x, double u);

/// Increment kernel R(tilde_x, x, u) -> (x', u') of the quadrant models.
/// For R_HSV, tilde_x in (0,1) drives the transition and (x,u) is the
/// integer occupation state (i, j).
Pair quadrant_kernel(const LocalMap& model, double tilde_x, double x, double u);

/// Transition thresholds c_{i,j} of the spin-1/2 vertex kernel.
double hsv_threshold(double alpha_v, double nu_v, double q, long long i, int j);

// --- coordinate conjugations linking the KdV and Toda families -------------

/// udKdV(J, inf) evaluated through the K_udT change of coordinates
/// (A^J)^{-1} . K_udT . A^J with A^J(x,u) = (J/2-x, u-J/2).
Pair udkdv_via_k_udt(double J, double x, double u);

/// dKdV(alpha, 0) evaluated through the K_dT change of coordinates
/// (A^alpha)^{-1} . K_dT . A^alpha with A^alpha(x,u) = (x sqrt(alpha), 1/(u sqrt(alpha))).
Pair dkdv_via_k_dt(double alpha, double x, double u);

}  // namespace ilat
