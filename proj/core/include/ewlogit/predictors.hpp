#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ewlogit/geometry.hpp"
#include "ewlogit/posterior.hpp"
#include "ewlogit/vec.hpp"

namespace ewlogit {

enum class PredictorMode { Exact, McTheory, McPractical, Baseline };

struct Prediction {
    double p_plus = 0.5;  // probability of label +1
    PredictorMode mode = PredictorMode::Exact;

    double prob_of(int y) const { return y > 0 ? p_plus : 1.0 - p_plus; }
};

struct ExactOptions {
    double rel_tol = 1e-8;
    const Vec* mode_hint = nullptr;
    int* used_path = nullptr;  // 0 = whitened Gauss-Hermite, 1 = graded composite (d=1), 2 = polar (d=2)
};

// Posterior-mean prediction E_{theta ~ rho}[sigma(<theta, x>)] by quadrature
// (d <= 2, temper must be 1). Whitened Gauss-Hermite when the posterior tails
// fit the node range, otherwise an origin-centered polar rule (d = 2) or a
// graded composite rule (d = 1).
Prediction ew_predict_exact(const PosteriorSpec& spec, std::span<const double> x,
                            const ExactOptions& opts = {});

// Monte-Carlo mixture-of-sigmoids estimate, then smoothing:
//   smooth_alpha( (1/s) sum_i sigma(<x, theta_i>) ).
// The y = -1 probability is the exact complement by construction.
Prediction ew_predict_mc(std::span<const Vec> samples, std::span<const double> x, double alpha);

// Per-round parameters of the computable estimator.
struct Schedule {
    double alpha_t = 0.0;   // smoothing
    double eps_t = 0.0;     // fresh TV budget
    double delta_t = 0.0;   // per-round failure budget
    long long s_t = 0;      // sample count (independent chains)
    int n = 0;              // horizon
    double delta = 0.0;     // total failure probability
};

// alpha_t = 1/(2n), eps_t = 1/(20 n^3), delta_t = delta/n,
// s_t = ceil(32 n^3 log(n/delta)); validates alpha_t s_t >= 16 log(1/delta_t).
Schedule corollary_schedule(int n, double delta);

struct OgdState {
    Vec theta;
    double B = 1.0;
    double R = 1.0;
    long t = 0;                       // completed updates
    std::optional<double> fixed_eta;  // overrides eta_t = B/(R sqrt(t))

    static OgdState init(std::size_t d, double B, double R) { return OgdState{Vec(d, 0.0), B, R, 0, {}}; }
};

// Proper prediction sigma(<theta, x>), then projected gradient step on the
// B-ball with eta_t = B/(R sqrt(t)).
Prediction ogd_predict_update(OgdState& state, const LabeledExample& example);

struct OnsState {
    Vec theta;
    std::vector<double> A;      // d x d, A_0 = eps_A I, then + g g^T
    std::vector<double> A_inv;  // maintained by rank-one (Sherman-Morrison) updates
    double B = 1.0;
    double R = 1.0;
    double eps_A = 1.0;
    double gamma_ons = 0.0;
    long t = 0;

    static OnsState init(std::size_t d, double B, double R, double eps_A = 1.0, double gamma_ons = 0.0);
};

// Online Newton step with generalized (A-norm) projection onto the B-ball.
Prediction ons_predict_update(OnsState& state, const LabeledExample& example);

struct SolidAngleOptions {
    std::uint64_t seed = 1;
    long hit_and_run_burn_in = 1000;
    double min_rejection_rate = 1e-6;
};

// The B -> infinity EW prediction: P(y <x, theta> > 0) for a standard
// Gaussian conditioned on the cone (plus half the tie mass, which is zero
// for x != 0 and exactly 1/2 at x = 0). Rejection sampling for d <= 3,
// hit-and-run otherwise or when rejection acceptance collapses.
Prediction solid_angle_predict(const ConeSlice& cone, std::span<const double> x, long mc_samples,
                               const SolidAngleOptions& opts = {});

}  // namespace ewlogit
