#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "ewlogit/loss.hpp"
#include "ewlogit/vec.hpp"

namespace ewlogit {

struct LabeledExample {
    Vec x;
    int y = +1;  // label in {-1,+1}
};

// Immutable flattened view of an example sequence: row i holds y_i * x_i,
// so every downstream loop reduces to dot products against signed rows.
// Shared by all PosteriorSpec prefixes of one online run.
class PosteriorData {
  public:
    static std::shared_ptr<const PosteriorData> make(std::span<const LabeledExample> examples,
                                                     double radius_check = 0.0);

    std::size_t dim() const { return d_; }
    std::size_t size() const { return n_; }
    std::span<const double> row(std::size_t i) const { return {rows_.data() + i * d_, d_}; }
    double max_norm() const { return max_norm_; }

  private:
    std::size_t d_ = 0;
    std::size_t n_ = 0;
    double max_norm_ = 0.0;
    std::vector<double> rows_;  // n x d, row i = y_i * x_i
};

// The EW posterior potential for a data prefix under a Gaussian prior:
//   V(theta) = sum_{i < prefix_len} w_i * loss(<row_i, theta>) + |theta|^2/(2B^2),
// with w_i = 1 except the last prefix row whose weight is `temper`.
// temper = 1 is the plain round-(prefix_len+1) posterior; temper in [0,1)
// is an intermediate rung of the power-tempered bridge; temper = 0 equals
// the previous round's posterior.
struct PosteriorSpec {
    std::shared_ptr<const PosteriorData> data;
    std::size_t prefix_len = 0;
    double B = 1.0;
    double temper = 1.0;

    std::size_t dim() const { return data ? data->dim() : 0; }
    void validate() const {
        if (!(B > 0.0)) throw std::invalid_argument("PosteriorSpec: B must be > 0");
        if (!(temper >= 0.0 && temper <= 1.0)) throw std::invalid_argument("PosteriorSpec: temper outside [0,1]");
        if (data && prefix_len > data->size()) throw std::invalid_argument("PosteriorSpec: prefix longer than data");
        if (!data && prefix_len > 0) throw std::invalid_argument("PosteriorSpec: prefix without data");
    }
};

PosteriorSpec make_posterior(std::shared_ptr<const PosteriorData> data, std::size_t prefix_len, double B,
                             double temper = 1.0);

double potential(const PosteriorSpec& spec, std::span<const double> theta);
void grad_potential(const PosteriorSpec& spec, std::span<const double> theta, std::span<double> out);
Vec grad_potential(const PosteriorSpec& spec, std::span<const double> theta);

// d x d Hessian of the potential, row-major; intended for d <= 2 (mode finding
// and quadrature whitening), valid for any d.
void hess_potential(const PosteriorSpec& spec, std::span<const double> theta, std::span<double> out);

struct ConvexityConstants {
    double m;      // strong convexity, 1/B^2
    double L;      // smoothness upper bound, R^2 (t-1)/4 + 1/B^2
    double kappa;  // L/m = 1 + B^2 R^2 (t-1)/4
};

ConvexityConstants constants(const PosteriorSpec& spec, double R);

// Newton minimizer of the potential (d <= 2). Used to center quadrature grids.
Vec potential_mode(const PosteriorSpec& spec, const Vec* hint = nullptr);

// log of the normalizer  log ∫ exp(-V(theta)) dtheta  by quadrature (d <= 2).
double log_partition(const PosteriorSpec& spec, double rel_tol = 1e-8);

// Second-order Renyi divergence D2(rho_{t,v} || rho_{t,v+dv}) between adjacent
// tempering rungs, by quadrature over the two unnormalized densities (d <= 2).
// Diagnostic for the adjacent-rung warmness bound D2 <= dv^2 R^2 B^2.
double renyi2_between_rungs(const PosteriorSpec& spec, double v, double dv, double rel_tol = 1e-8);

}  // namespace ewlogit
