#include "ilat/carrier_solver.hpp"

#include <cmath>
#include <sstream>

namespace ilat {

namespace {

bool is_type2_family(MapFamily f) { return f == MapFamily::udToda || f == MapFamily::dToda; }

void check_model_window_consistency(const LatticeWindow& w) {
    bool type2 = is_type2_family(w.model.family);
    if (type2 != (w.kind == WindowKind::typeII))
        fail(ErrorKind::InvalidParams, "window kind does not match the model family");
}

// Carrier recursion u -> F^(2)(x, u) for type I models.
double carrier_step_type1(const LocalMap& model, double x, double u) {
    switch (model.family) {
        case MapFamily::udKdV: return udkdv_map(model.param("J"), model.param("K"), x, u)[1];
        case MapFamily::dKdV: {
            double a = model.param("alpha"), b = model.param("beta");
            if (a > 0.0 && b > 0.0)
                fail(ErrorKind::UnsupportedRegime,
                     "carrier solving for dKdV with alpha*beta > 0 is not supported");
            return dkdv_map(a, b, x, u)[1];
        }
        default:
            fail(ErrorKind::UnsupportedFamily,
                 std::string(to_string(model.family)) + " has no type I carrier recursion");
    }
}

// Carrier recursion across one pair for type II models: the carrier entering
// pair i+1 from the carrier entering pair i.
double carrier_step_type2(const LocalMap& model, std::pair<double, double> pair_i,
                          double next_first, double u) {
    switch (model.family) {
        case MapFamily::udToda:
            // (Q_{i+1}, E_i, U_i) -> U_{i+1}
            return udtoda_map(next_first, pair_i.second, u)[2];
        case MapFamily::dToda: return dtoda_map(next_first, pair_i.second, u)[2];
        default: fail(ErrorKind::UnsupportedFamily, "not a type II family");
    }
}

}  // namespace

void LatticeWindow::check() const {
    if (values.empty()) fail(ErrorKind::InvalidParams, "empty window");
    if (kind == WindowKind::typeII && values.size() % 2 != 0)
        fail(ErrorKind::InvalidParams, "type II window must hold whole pairs");
    check_model_window_consistency(*this);
    if (model.family == MapFamily::dKdV || model.family == MapFamily::dToda) {
        for (double v : values)
            if (!(v > 0.0)) fail(ErrorKind::DomainError, "window values must be positive");
    }
}

double default_carrier_tol(const LocalMap& model) {
    switch (model.family) {
        case MapFamily::udKdV:
        case MapFamily::udToda: return 0.0;
        default: return 1e-10;
    }
}

std::pair<double, double> default_carrier_seeds(const LocalMap& model) {
    switch (model.family) {
        case MapFamily::dKdV:
        case MapFamily::dToda: return {1e-3, 1e3};
        default: return {0.0, 1.0};
    }
}

CarrierPath solve_carrier_coupled(const LatticeWindow& window, std::pair<double, double> seeds,
                                  double tol) {
    window.check();
    if (window.sites() < 2) fail(ErrorKind::InvalidParams, "window too short for coupling");
    if (seeds.first == seeds.second) fail(ErrorKind::InvalidParams, "seeds must be distinct");

    CarrierPath path;
    double ua = seeds.first, ub = seeds.second;
    bool synced = false;
    long sync_at = 0;

    if (window.kind == WindowKind::typeI) {
        for (long n = window.offset; n <= window.last_index(); ++n) {
            double x = window.x_at(n);
            ua = carrier_step_type1(window.model, x, ua);
            if (!synced) {
                ub = carrier_step_type1(window.model, x, ub);
                if (std::fabs(ua - ub) <= tol) {
                    synced = true;
                    sync_at = n;
                    path.offset = n;
                }
            }
            if (synced) path.values.push_back(ua);
        }
    } else {
        // Type II: carrier enters pair i; advancing consumes pair i and the
        // first slot of pair i+1.
        long first = window.offset, last = window.last_index();
        for (long i = first; i < last; ++i) {
            double next_first = window.pair_at(i + 1).first;
            ua = carrier_step_type2(window.model, window.pair_at(i), next_first, ua);
            if (!synced) {
                ub = carrier_step_type2(window.model, window.pair_at(i), next_first, ub);
                if (std::fabs(ua - ub) <= tol) {
                    synced = true;
                    sync_at = i + 1;
                    path.offset = i + 1;
                }
            }
            if (synced) path.values.push_back(ua);
        }
    }
    if (!synced)
        fail(ErrorKind::NotSynchronized,
             "coupled seeds did not meet within the window (" +
                 std::to_string(window.sites()) + " sites)");
    path.sync_index = sync_at;

    // Residual contract: the emitted values satisfy the recursion.
    double res = 0.0;
    if (window.kind == WindowKind::typeI) {
        for (long n = path.offset + 1; n < path.offset + static_cast<long>(path.values.size());
             ++n) {
            double expect = carrier_step_type1(window.model, window.x_at(n), path.at(n - 1));
            res = std::max(res, std::fabs(expect - path.at(n)));
        }
    } else {
        for (long i = path.offset + 1; i < path.offset + static_cast<long>(path.values.size());
             ++i) {
            double expect = carrier_step_type2(window.model, window.pair_at(i - 1),
                                               window.pair_at(i).first, path.at(i - 1));
            res = std::max(res, std::fabs(expect - path.at(i)));
        }
    }
    path.residual = res;
    return path;
}

CarrierPath solve_carrier_contfrac(const LatticeWindow& window, std::size_t depth, double tol) {
    window.check();
    if (window.kind != WindowKind::typeI || window.model.family != MapFamily::dKdV)
        fail(ErrorKind::UnsupportedFamily, "continued-fraction solver applies to dKdV only");
    double alpha = window.model.param("alpha"), beta = window.model.param("beta");
    if (alpha != 0.0 || !(beta > 0.0))
        fail(ErrorKind::UnsupportedRegime, "continued-fraction solver requires alpha = 0, beta > 0");
    if (depth < 2) fail(ErrorKind::InvalidParams, "depth must be >= 2");

    const std::size_t deep = depth + 8;
    if (window.sites() < deep + 1) fail(ErrorKind::InvalidParams, "window shorter than depth + 8");

    auto truncated = [&](long n, std::size_t terms) {
        // Bottom-up evaluation of u_n = x_n / (1 + beta x_n u_{n-1}) seeded
        // with u = 0 a fixed number of terms back.
        double u = 0.0;
        for (long k = n - static_cast<long>(terms) + 1; k <= n; ++k) {
            double x = window.x_at(k);
            u = x / (1.0 + beta * x * u);
        }
        return u;
    };

    CarrierPath path;
    path.offset = window.offset + static_cast<long>(deep) - 1;
    path.sync_index = path.offset;
    for (long n = path.offset; n <= window.last_index(); ++n) {
        double shallow = truncated(n, depth);
        double deep_val = truncated(n, deep);
        if (std::fabs(shallow - deep_val) > tol)
            fail(ErrorKind::NotConverged, "continued fraction not converged at depth " +
                                              std::to_string(depth));
        path.values.push_back(deep_val);
    }
    double res = 0.0;
    for (long n = path.offset + 1; n <= window.last_index(); ++n) {
        double x = window.x_at(n);
        double expect = x / (1.0 + beta * x * path.at(n - 1));
        res = std::max(res, std::fabs(expect - path.at(n)));
    }
    if (res > tol) fail(ErrorKind::NotConverged, "recursion residual above tolerance");
    path.residual = res;
    return path;
}

CarrierPath solve_carrier_udtoda(const LatticeWindow& window) {
    window.check();
    if (window.model.family != MapFamily::udToda)
        fail(ErrorKind::UnsupportedFamily, "closed-form solver applies to udToda only");
    CarrierPath path;
    path.offset = window.offset;
    path.sync_index = window.offset;
    // U_i = Q_i + M_i with M_i the running maximum of truncated backward
    // partial sums of Q - E; M advances by M' = max{Q - E + M, 0}.
    double m = 0.0;
    for (long i = window.offset; i <= window.last_index(); ++i) {
        auto [q, e] = window.pair_at(i);
        path.values.push_back(q + m);
        m = std::max(q - e + m, 0.0);
    }
    path.residual = 0.0;
    return path;
}

CarrierPath solve_carrier(const LatticeWindow& window) {
    if (window.model.family == MapFamily::udToda) return solve_carrier_udtoda(window);
    return solve_carrier_coupled(window, default_carrier_seeds(window.model),
                                 default_carrier_tol(window.model));
}

LatticeWindow evolve_one_step(const LatticeWindow& window, const CarrierPath& carrier) {
    window.check();
    LatticeWindow out;
    out.kind = window.kind;
    out.model = window.model;

    if (window.kind == WindowKind::typeI) {
        long start = std::max(window.offset, carrier.offset + 1);
        long stop = std::min(window.last_index(),
                             carrier.offset + static_cast<long>(carrier.values.size()) - 1);
        if (start > stop) fail(ErrorKind::CoverageError, "carrier does not cover the window");
        out.offset = start;
        for (long n = start; n <= stop; ++n) {
            double x = window.x_at(n);
            double u = carrier.at(n - 1);
            switch (window.model.family) {
                case MapFamily::udKdV:
                    out.values.push_back(
                        udkdv_map(window.model.param("J"), window.model.param("K"), x, u)[0]);
                    break;
                case MapFamily::dKdV:
                    out.values.push_back(
                        dkdv_map(window.model.param("alpha"), window.model.param("beta"), x, u)[0]);
                    break;
                default: fail(ErrorKind::UnsupportedFamily, "not a type I family");
            }
        }
    } else {
        long start = std::max(window.offset, carrier.offset);
        long stop = std::min(window.last_index() - 1,
                             carrier.offset + static_cast<long>(carrier.values.size()) - 1);
        if (start > stop) fail(ErrorKind::CoverageError, "carrier does not cover the window");
        out.offset = start;
        for (long i = start; i <= stop; ++i) {
            auto [first_i, second_i] = window.pair_at(i);
            double next_first = window.pair_at(i + 1).first;
            double u = carrier.at(i);
            Triple res = window.model.family == MapFamily::udToda
                             ? udtoda_map(next_first, second_i, u)
                             : dtoda_map(next_first, second_i, u);
            out.values.push_back(res[0]);
            out.values.push_back(res[1]);
        }
    }
    return out;
}

double SpaceTimeField::max_local_residual() const {
    double worst = 0.0;
    for (std::size_t t = 0; t + 1 < config.size(); ++t) {
        const LatticeWindow& cur = config[t];
        const LatticeWindow& nxt = config[t + 1];
        const CarrierPath& u = carrier[t];
        if (cur.kind == WindowKind::typeI) {
            for (long n = nxt.offset; n <= nxt.last_index(); ++n) {
                if (!u.covers(n - 1) || !u.covers(n)) continue;
                Pair out = eval_pair_map(cur.model, cur.x_at(n), u.at(n - 1));
                worst = std::max(worst, std::fabs(out[0] - nxt.x_at(n)));
                worst = std::max(worst, std::fabs(out[1] - u.at(n)));
            }
        } else {
            for (long i = nxt.offset; i <= nxt.last_index(); ++i) {
                if (!u.covers(i) || !u.covers(i + 1) || i + 1 > cur.last_index()) continue;
                auto [q1, e0] = std::pair{cur.pair_at(i + 1).first, cur.pair_at(i).second};
                Triple out = eval_triple_map(cur.model, {q1, e0, u.at(i)});
                auto [oq, oe] = nxt.pair_at(i);
                worst = std::max(worst, std::fabs(out[0] - oq));
                worst = std::max(worst, std::fabs(out[1] - oe));
                worst = std::max(worst, std::fabs(out[2] - u.at(i + 1)));
            }
        }
    }
    return worst;
}

std::string SpaceTimeField::to_csv() const {
    std::ostringstream os;
    os << "t,n,x,u\n";
    for (std::size_t t = 0; t < config.size(); ++t) {
        const LatticeWindow& w = config[t];
        const CarrierPath* u = t < carrier.size() ? &carrier[t] : nullptr;
        if (w.kind == WindowKind::typeI) {
            for (long n = w.offset; n <= w.last_index(); ++n) {
                os << t << ',' << n << ',' << w.x_at(n) << ',';
                if (u && u->covers(n)) os << u->at(n);
                os << '\n';
            }
        } else {
            for (long i = w.offset; i <= w.last_index(); ++i) {
                auto [a, b] = w.pair_at(i);
                os << t << ',' << 2 * i << ',' << a << ',';
                if (u && u->covers(i)) os << u->at(i);
                os << '\n';
                os << t << ',' << 2 * i + 1 << ',' << b << ",\n";
            }
        }
    }
    return os.str();
}

SpaceTimeField evolve_multi(const LatticeWindow& window, std::size_t t_steps, std::size_t margin,
                            std::optional<std::pair<double, double>> seeds) {
    window.check();
    SpaceTimeField field;
    field.config.push_back(window);
    for (std::size_t t = 0; t < t_steps; ++t) {
        const LatticeWindow& cur = field.config.back();
        CarrierPath u;
        if (cur.model.family == MapFamily::udToda) {
            u = solve_carrier_udtoda(cur);
        } else {
            if (cur.sites() < 2)
                fail(ErrorKind::CoverageError, "window exhausted after " + std::to_string(t) +
                                                   " steps");
            u = solve_carrier_coupled(cur, seeds.value_or(default_carrier_seeds(cur.model)),
                                      default_carrier_tol(cur.model));
            if (*u.sync_index > cur.offset + static_cast<long>(margin))
                fail(ErrorKind::NotSynchronized,
                     "carrier synchronized only at offset +" +
                         std::to_string(*u.sync_index - cur.offset) + " > margin " +
                         std::to_string(margin));
        }

        // Uniform erosion: drop the margin on the left regardless of where the
        // synchronization actually happened.
        long start = cur.offset + static_cast<long>(margin);
        CarrierPath trimmed;
        trimmed.sync_index = u.sync_index;
        trimmed.residual = u.residual;
        long from = std::max(u.offset, start);
        trimmed.offset = from;
        for (long n = from; n < u.offset + static_cast<long>(u.values.size()); ++n)
            trimmed.values.push_back(u.at(n));
        if (trimmed.values.empty())
            fail(ErrorKind::CoverageError, "window exhausted after erosion");

        LatticeWindow next = evolve_one_step(cur, trimmed);
        field.carrier.push_back(std::move(trimmed));
        field.config.push_back(std::move(next));
    }
    return field;
}

ReconstructedColumn reconstruct_from_carrier(const std::vector<double>& carrier_column,
                                             const LocalMap& model,
                                             std::pair<double, double> seeds, double tol) {
    if (carrier_column.empty()) fail(ErrorKind::EmptySample, "empty carrier column");
    if (model.family != MapFamily::udKdV && model.family != MapFamily::dKdV)
        fail(ErrorKind::UnsupportedFamily, "reconstruction applies to type I models");
    if (seeds.first == seeds.second) fail(ErrorKind::InvalidParams, "seeds must be distinct");

    double xa = seeds.first, xb = seeds.second;
    bool synced = false;
    ReconstructedColumn out;
    for (std::size_t t = 0; t < carrier_column.size(); ++t) {
        double u = carrier_column[t];
        xa = eval_pair_map(model, xa, u)[0];
        if (!synced) {
            xb = eval_pair_map(model, xb, u)[0];
            if (std::fabs(xa - xb) <= tol) {
                synced = true;
                out.sync_t = static_cast<long>(t) + 1;
            }
        }
        if (synced) out.values.push_back(xa);
    }
    if (!synced) fail(ErrorKind::NotSynchronized, "reconstruction seeds never coupled");
    return out;
}

}  // namespace ilat
