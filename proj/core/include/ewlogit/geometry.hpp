#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ewlogit/posterior.hpp"
#include "ewlogit/rng.hpp"
#include "ewlogit/vec.hpp"

namespace ewlogit {

// Linear constraints y_i <x_i, theta> >= gamma. gamma = 0 with strict
// inequality encodes the open version cone; gamma > 0 a margin slice.
struct ConeSlice {
    std::vector<Vec> rows;  // a_i = y_i * x_i
    double gamma = 0.0;

    std::size_t dim() const { return rows.empty() ? 0 : rows.front().size(); }
    void add(const LabeledExample& e) {
        rows.push_back(e.x);
        for (double& v : rows.back()) v *= e.y;
    }
};

ConeSlice cone_from_examples(std::span<const LabeledExample> examples, double gamma = 0.0);

struct SvmSolution {
    Vec theta;           // min-norm point of the gamma-slice
    Vec w;               // theta / gamma, the hard-margin (unit-slice) solution
    double margin_norm;  // |w|
    bool feasible = false;
};

struct DykstraOptions {
    double tol = 1e-10;
    long max_iter = 100000;
};

// Projection of the origin onto the slice (Dykstra cyclic projections onto
// the half-spaces). Infeasible (non-separable) instances are reported via
// feasible = false.
SvmSolution min_norm_point(const ConeSlice& cone, const DykstraOptions& opts = {});

// The unique mode of the standard Gaussian truncated to the gamma-slice; it
// coincides with the min-norm point, exposed separately so the identity can
// be asserted.
Vec truncated_gaussian_mode(const ConeSlice& cone, const DykstraOptions& opts = {});

struct MarginReport {
    double gamma = 0.0;      // min_t y_t <u, x_t>
    double R = 0.0;          // max_t |x_t|
    double gamma_bar = 0.0;  // gamma / R
    double t0 = 0.0;         // 1/sqrt(1+gamma_bar^2)
    double t1 = 0.0;         // (1+t0)/2
    double alpha_t1 = 0.0;   // gamma t1 - R sqrt(1-t1^2)
    double lambda0 = 0.0;    // log(2n)/alpha(t1)
    double B_critic = 0.0;
    bool separable = false;
    int d = 0;
    int n = 0;
};

// k_d1: constant for the d = 1 threshold k log(2n)/gamma (the angular cap
// argument needs d >= 2; in one dimension only the radial tail remains).
MarginReport margin_report(std::span<const LabeledExample> data, std::span<const double> u, int n,
                           double k_d1 = 6.8284271247461903);

// c_d = Gamma(d/2) / ((d-1) sqrt(pi) Gamma((d-1)/2)), the spherical-cap
// lower-bound constant: P(<U,u> >= t) >= c_d (1-t^2)^{(d-1)/2}.
double cap_lower_bound_constant(int d);

struct CapCheck {
    double empirical = 0.0;
    double lower_bound = 0.0;
    double std_error = 0.0;
};

CapCheck cap_probability_check(int d, double t, long mc, std::uint64_t seed);

// Samples mc directions in Cap(u, t1) and verifies every one satisfies
// min_i y_i <x_i, v> >= gamma t1 - R sqrt(1 - t1^2). True iff no violation.
bool cone_cap_inclusion_check(std::span<const LabeledExample> data, std::span<const double> u, double t1,
                              long mc, std::uint64_t seed);

// Diagnostic upper bound on the cumulative EW loss of a separable instance,
// with the constants instantiated from the radial/angular decomposition:
//   (d-1) log(2/gamma_bar) - log c_d + 1 + Rad(B, lambda0),
//   Rad = log 2                                   when B >= lambda0/sqrt(d-1)
//       = (lambda0/B)^2/2 + 3/2 + (d/2-1) log 2 + log Gamma(d/2)  otherwise.
double cumulative_loss_bound(const MarginReport& report, double B, int d);

// Sampling helpers (shared with the solid-angle voter).
Vec sample_unit_sphere(int d, SplitMix64& rng);
Vec sample_cap_direction(std::span<const double> u, double t1, SplitMix64& rng);

}  // namespace ewlogit
