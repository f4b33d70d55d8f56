#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ilat/lattice_maps.hpp"

namespace ilat {

enum class WindowKind { typeI, typeII };

/// Finite contiguous block of a configuration. Type I windows hold one scalar
/// per site; type II windows hold interleaved pairs, flattened as
/// [Q_0, E_0, Q_1, E_1, ...] for udToda (resp. (I, J) for dToda), with pair i
/// living at lattice index offset + i.
struct LatticeWindow {
    long offset = 0;
    WindowKind kind = WindowKind::typeI;
    std::vector<double> values;
    LocalMap model;

    std::size_t sites() const {
        return kind == WindowKind::typeI ? values.size() : values.size() / 2;
    }
    long last_index() const { return offset + static_cast<long>(sites()) - 1; }

    double x_at(long n) const { return values.at(static_cast<std::size_t>(n - offset)); }
    std::pair<double, double> pair_at(long i) const {
        std::size_t k = 2 * static_cast<std::size_t>(i - offset);
        return {values.at(k), values.at(k + 1)};
    }

    void check() const;
};

/// Carrier values aligned to a window. values[k] is the carrier at lattice
/// index offset + k: for type I the value leaving site n, for type II the
/// value entering pair i.
struct CarrierPath {
    long offset = 0;
    std::vector<double> values;
    std::optional<long> sync_index;
    double residual = 0.0;

    bool covers(long n) const {
        return n >= offset && n < offset + static_cast<long>(values.size());
    }
    double at(long n) const { return values.at(static_cast<std::size_t>(n - offset)); }
};

/// Iterate the carrier recursion from the left window edge with two coupled
/// seeds; once they agree within `tol` the path is seed-independent and is
/// emitted from that index on. Throws NotSynchronized when the seeds never
/// meet inside the window.
CarrierPath solve_carrier_coupled(const LatticeWindow& window, std::pair<double, double> seeds,
                                  double tol);

/// Truncated continued-fraction solver for dKdV with alpha = 0, beta > 0.
/// Throws NotConverged when deepening the fraction by 8 terms still moves the
/// value by more than `tol`.
CarrierPath solve_carrier_contfrac(const LatticeWindow& window, std::size_t depth, double tol);

/// Closed-form udToda carrier: at each pair, Q plus the running maximum of the
/// truncated backward partial sums of Q - E. Exact in max-plus arithmetic.
CarrierPath solve_carrier_udtoda(const LatticeWindow& window);

/// Family-appropriate solver with default seeds and tolerance.
CarrierPath solve_carrier(const LatticeWindow& window);

double default_carrier_tol(const LocalMap& model);
std::pair<double, double> default_carrier_seeds(const LocalMap& model);

/// One application of the one-step operator. Type II output pairs include the
/// index shift: the new pair i combines the carrier and E at i with Q at i+1,
/// so Q-slots map to Q-slots and E-slots to E-slots.
LatticeWindow evolve_one_step(const LatticeWindow& window, const CarrierPath& carrier);

struct SpaceTimeField {
    std::vector<LatticeWindow> config;  // config[t], t = 0..t_steps
    std::vector<CarrierPath> carrier;   // carrier[t] used to advance config[t]

    /// Largest violation of the local relation over every stored cell.
    double max_local_residual() const;

    /// CSV with columns t,n,x,u (u blank where the carrier is not stored).
    std::string to_csv() const;
};

/// Repeatedly solve the carrier and advance, eroding `margin` sites from the
/// left each step (the pre-synchronization region is discarded). Throws
/// CoverageError when the erosion exhausts the window and NotSynchronized when
/// a carrier fails to couple inside the margin.
SpaceTimeField evolve_multi(const LatticeWindow& window, std::size_t t_steps, std::size_t margin,
                            std::optional<std::pair<double, double>> seeds = std::nullopt);

struct ReconstructedColumn {
    long sync_t = 0;                // first time index of the emitted values
    std::vector<double> values;     // x at times sync_t, sync_t + 1, ...
};

/// Recover a configuration column from the carrier column to its left by
/// coupling two seeds through x^{t+1} = F^{(1)}(x^t, u^t). Throws
/// NotSynchronized when the seeds never agree within `tol`.
ReconstructedColumn reconstruct_from_carrier(const std::vector<double>& carrier_column,
                                             const LocalMap& model,
                                             std::pair<double, double> seeds, double tol);

}  // namespace ilat
