#pragma once

#include <array>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ewlogit {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Gauss-Legendre nodes/weights on [-1,1], computed once per order and cached.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussRule& gauss_legendre(int n);

// Gauss-Hermite nodes/weights for weight exp(-x^2) on R (physicists'), cached.
const GaussRule& gauss_hermite(int n);

// Adaptive Simpson for a pair of integrands sharing evaluations.
// `knots` are interior split points (sorted, inside (a,b)) seeding the
// recursion at known feature locations. Converges each component to
// |err| <= rel_tol * max(|I|, floor); throws QuadratureError when the depth
// cap is hit with the error estimate still out of tolerance.
// `abs_floor` lifts the per-component tolerance off the coarse estimate's
// scale; it keeps the recursion from chasing noise on segments whose true
// value is negligible relative to a caller-known global scale.
using PairFn = std::function<std::array<double, 2>(double)>;
std::array<double, 2> integrate_pair_adaptive(const PairFn& f, double a, double b, double rel_tol,
                                              std::span<const double> knots = {}, int max_depth = 52,
                                              std::array<double, 2> abs_floor = {0.0, 0.0});

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                          std::span<const double> knots = {}, int max_depth = 52);

// Standard normal CDF and its inverse.
double normal_cdf(double z);
double normal_cdf_inv(double p);

// A smooth convex potential with derivatives, d in {1,2}. The integrators
// below whiten at the minimizer and use graded panels so that both the core
// (unit scale after whitening) and the prior-scale tails are resolved.
struct Field {
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> grad;
    std::function<void(std::span<const double>, std::span<double>)> hess;  // d*d row-major
    std::size_t dim = 1;
};

// Newton with backtracking; `init` empty means start at the origin.
std::vector<double> minimize_field(const Field& f, std::vector<double> init = {});

// log of ∫ w(theta) exp(-F(theta)) dtheta for a nonnegative weight w
// (nullptr means w == 1). `tail_scale` bounds the slowest decay scale of
// exp(-F) in any direction (the Gaussian-prior sigma for EW posteriors).
double log_weighted_integral(const Field& f,
                             const std::function<double(std::span<const double>)>& weight,
                             double tail_scale, double rel_tol, const std::vector<double>* mode_hint = nullptr);

}  // namespace ewlogit
