#include "ewlogit/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ewlogit/dense.hpp"
#include "ewlogit/quadrature.hpp"

namespace ewlogit {

namespace {

struct Chol2 {
    double l00 = 1.0, l10 = 0.0, l11 = 1.0;  // lower factor of the 2x2 (or 1x1) Hessian
    std::size_t d = 1;

    // theta = mode + L^{-T} u
    void to_theta(std::span<const double> mode, double u0, double u1, std::span<double> theta) const {
        if (d == 1) {
            theta[0] = mode[0] + u0 / l00;
        } else {
            const double t1 = u1 / l11;
            theta[0] = mode[0] + (u0 - l10 * t1) / l00;
            theta[1] = mode[1] + t1;
        }
    }
    double max_col_norm() const {
        if (d == 1) return l00;
        return std::max(std::hypot(l00, l10), std::abs(l11));
    }
};

Chol2 chol_hessian(const PosteriorSpec& spec, std::span<const double> mode) {
    const std::size_t d = std::max<std::size_t>(1, spec.dim());
    std::vector<double> h(d * d);
    hess_potential(spec, mode, h);
    Chol2 c;
    c.d = d;
    if (d == 1) {
        if (!(h[0] > 0.0)) throw QuadratureError("ew_predict_exact: Hessian not PD");
        c.l00 = std::sqrt(h[0]);
        return c;
    }
    if (!(h[0] > 0.0)) throw QuadratureError("ew_predict_exact: Hessian not PD");
    c.l00 = std::sqrt(h[0]);
    c.l10 = h[2] / c.l00;
    const double t = h[3] - c.l10 * c.l10;
    if (!(t > 0.0)) throw QuadratureError("ew_predict_exact: Hessian not PD");
    c.l11 = std::sqrt(t);
    return c;
}

struct NumDen {
    double num = 0.0, den = 0.0;
};

// Whitened Gauss-Hermite pass at one order. Returns integrals of
// {sigma(<x,theta>), 1} * exp(-(V - Vm)) over u, up to the common jacobian
// (cancels in the ratio).
NumDen gh_pass(const PosteriorSpec& spec, std::span<const double> x, std::span<const double> mode,
               double vm, const Chol2& L, int order) {
    const GaussRule& r = gauss_hermite(order);
    std::vector<double> mw(order);
    for (int i = 0; i < order; ++i) mw[i] = r.weights[i] * std::exp(r.nodes[i] * r.nodes[i]);
    NumDen acc;
    Vec theta(L.d);
    const double s2 = std::sqrt(2.0);
    if (L.d == 1) {
        for (int i = 0; i < order; ++i) {
            L.to_theta(mode, s2 * r.nodes[i], 0.0, theta);
            const double e = std::exp(-(potential(spec, theta) - vm));
            const double wgt = mw[i] * e;
            acc.den += wgt;
            acc.num += wgt * sigmoid(theta[0] * x[0]);
        }
    } else {
        for (int i = 0; i < order; ++i) {
            for (int j = 0; j < order; ++j) {
                L.to_theta(mode, s2 * r.nodes[i], s2 * r.nodes[j], theta);
                const double e = std::exp(-(potential(spec, theta) - vm));
                const double wgt = mw[i] * mw[j] * e;
                acc.den += wgt;
                acc.num += wgt * sigmoid(dot(theta, x));
            }
        }
    }
    return acc;
}

// The GH node range must dominate the posterior tails. Convexity of V makes
// the density decay at least exponentially along rays from the mode: past a
// probe ring at whitened radius U with potential rise dV, the radial slope is
// at least g = dV/U, so (in whitened coordinates)
//   mass(|u| > U) <= 2 pi e^{-dV} (U/g + 1/g^2)      (d = 2; 2 e^{-dV}/g at d = 1),
// while the core integral is Omega(1). The rule is trusted only when this
// bound sits far below the requested tolerance.
bool gh_tails_ok(const PosteriorSpec& spec, std::span<const double> mode, double vm, const Chol2& L,
                 double probe_radius, double rel_tol) {
    const double U = probe_radius;
    double dv_min = std::numeric_limits<double>::infinity();
    Vec theta(L.d);
    if (L.d == 1) {
        for (double s : {-1.0, 1.0}) {
            L.to_theta(mode, s * U, 0.0, theta);
            dv_min = std::min(dv_min, potential(spec, theta) - vm);
        }
    } else {
        const int rays = 128;
        for (int k = 0; k < rays; ++k) {
            const double a = 2.0 * M_PI * k / rays;
            L.to_theta(mode, U * std::cos(a), U * std::sin(a), theta);
            dv_min = std::min(dv_min, potential(spec, theta) - vm);
        }
    }
    if (!(dv_min > 0.0)) return false;
    const double g = dv_min / U;
    const double tail = (L.d == 1) ? 2.0 * std::exp(-dv_min) / g
                                   : 2.0 * M_PI * std::exp(-dv_min) * (U / g + 1.0 / (g * g));
    return tail <= 1e-2 * rel_tol;
}

double eig_min_2x2(double a, double b, double c) {
    return 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
}

// Origin-centered polar rule for d = 2: adaptive Simpson over the angle with
// knots at the constraint/query wall angles, a graded-panel Gauss-Legendre
// rule in the radius. Handles the near-indicator wedge shapes that appear at
// large B*R, where the whitened cartesian rule cannot reach tolerance.
NumDen polar_pair(const PosteriorSpec& spec, std::span<const double> x, std::span<const double> mode,
                  double vm, double rel_tol) {
    std::vector<double> h(4);
    hess_potential(spec, mode, h);
    const double lmin = eig_min_2x2(h[0], h[1], h[3]);
    const double core_w = 1.0 / std::sqrt(std::max(lmin, 1e-300));
    const double rmax = norm2(mode) + 12.0 * (spec.B + std::min(core_w, spec.B));

    // wall angles: directions orthogonal to each signed row and to the query
    std::vector<double> knots;
    auto add_wall = [&knots](double ax, double ay) {
        if (ax == 0.0 && ay == 0.0) return;
        const double base = std::atan2(ay, ax);
        for (double off : {M_PI / 2.0, -M_PI / 2.0}) {
            double a = std::fmod(base + off, 2.0 * M_PI);
            if (a < 0.0) a += 2.0 * M_PI;
            knots.push_back(a);
        }
    };
    for (std::size_t i = 0; i < spec.prefix_len; ++i) {
        const auto row = spec.data->row(i);
        add_wall(row[0], row[1]);
    }
    add_wall(x[0], x[1]);
    std::sort(knots.begin(), knots.end());

    // radial feature locations: geometric ladder plus the mode radius
    std::vector<double> rknots;
    for (double e = std::min(1.0, rmax / 16.0); e < rmax; e *= 2.0) rknots.push_back(e);
    const double mode_r = norm2(mode);
    if (mode_r > 0.0 && mode_r < rmax) rknots.push_back(mode_r);
    std::sort(rknots.begin(), rknots.end());

    // inner tolerance is lifted off the line through the mode so that
    // negligible angles do not trigger noise-chasing refinement
    std::array<double, 2> inner_floor{0.0, 0.0};
    auto radial = [&](double phi) -> std::array<double, 2> {
        const double cx = std::cos(phi), sx = std::sin(phi);
        Vec theta(2);
        auto line = [&](double r) -> std::array<double, 2> {
            theta[0] = r * cx;
            theta[1] = r * sx;
            const double e = r * std::exp(-(potential(spec, theta) - vm));
            return {e * sigmoid(dot(theta, x)), e};
        };
        return integrate_pair_adaptive(line, 0.0, rmax, 0.05 * rel_tol, rknots, 52, inner_floor);
    };

    const double phi_mode = std::atan2(mode[1], mode[0]);
    const auto scale_line = radial(phi_mode);
    const double scale = std::max(std::abs(scale_line[0]), std::abs(scale_line[1]));
    inner_floor = {0.05 * rel_tol * scale, 0.05 * rel_tol * scale};

    const auto res = integrate_pair_adaptive(radial, 0.0, 2.0 * M_PI, rel_tol, knots);
    return NumDen{res[0], res[1]};
}

}  // namespace

Prediction ew_predict_exact(const PosteriorSpec& spec, std::span<const double> x, const ExactOptions& opts) {
    spec.validate();
    const std::size_t d = std::max<std::size_t>(1, spec.dim());
    if (d > 2) throw std::invalid_argument("ew_predict_exact: d <= 2 only");
    if (spec.temper != 1.0) throw std::invalid_argument("ew_predict_exact: temper must be 1");
    if (spec.prefix_len > 0 && x.size() != d) throw std::invalid_argument("ew_predict_exact: x dimension mismatch");

    // prior symmetry about 0 (empty prefix), and sigma(0) for a zero query
    if (spec.prefix_len == 0) return Prediction{0.5, PredictorMode::Exact};
    bool x_zero = true;
    for (double v : x) x_zero = x_zero && v == 0.0;
    if (x_zero) return Prediction{0.5, PredictorMode::Exact};

    const Vec mode = potential_mode(spec, opts.mode_hint);
    const double vm = potential(spec, mode);
    const Chol2 L = chol_hessian(spec, mode);

    // higher orders reach further into the tails; start from the first order
    // whose node range provably covers the posterior mass
    const std::vector<int> orders =
        (d == 1) ? std::vector<int>{64, 96, 128, 160} : std::vector<int>{20, 32, 48, 64, 96};
    std::size_t start = orders.size();
    for (std::size_t k = 0; k + 1 < orders.size(); ++k) {
        const double probe = std::sqrt(2.0) * gauss_hermite(orders[k + 1]).nodes.back() + 1.0;
        if (gh_tails_ok(spec, mode, vm, L, probe, opts.rel_tol)) {
            start = k;
            break;
        }
    }

    double p = -1.0;
    if (start + 1 < orders.size()) {
        NumDen prev = gh_pass(spec, x, mode, vm, L, orders[start]);
        for (std::size_t k = start + 1; k < orders.size(); ++k) {
            const NumDen cur = gh_pass(spec, x, mode, vm, L, orders[k]);
            const double scale = std::max(std::abs(cur.den), 1e-290);
            if (std::abs(prev.den - cur.den) <= opts.rel_tol * scale &&
                std::abs(prev.num - cur.num) <= opts.rel_tol * scale && cur.den > 0.0) {
                p = cur.num / cur.den;
                break;
            }
            prev = cur;
        }
    }
    if (opts.used_path) *opts.used_path = (p >= 0.0) ? 0 : (d == 1 ? 1 : 2);
    if (p < 0.0) {
        if (d == 1) {
            Field f;
            f.dim = 1;
            f.value = [&spec](std::span<const double> t) { return potential(spec, t); };
            f.grad = [&spec](std::span<const double> t, std::span<double> o) { grad_potential(spec, t, o); };
            f.hess = [&spec](std::span<const double> t, std::span<double> o) { hess_potential(spec, t, o); };
            const double q = x[0];
            auto weight = [q](std::span<const double> t) { return sigmoid(t[0] * q); };
            const double log_num = log_weighted_integral(f, weight, spec.B, opts.rel_tol, &mode);
            const double log_den = log_weighted_integral(f, nullptr, spec.B, opts.rel_tol, &mode);
            p = std::exp(log_num - log_den);
        } else {
            const NumDen nd = polar_pair(spec, x, mode, vm, opts.rel_tol);
            if (!(nd.den > 0.0)) throw QuadratureError("ew_predict_exact: degenerate denominator");
            p = nd.num / nd.den;
        }
    }
    return Prediction{std::clamp(p, 0.0, 1.0), PredictorMode::Exact};
}

Prediction ew_predict_mc(std::span<const Vec> samples, std::span<const double> x, double alpha) {
    if (samples.empty()) throw std::invalid_argument("ew_predict_mc: empty sample list");
    double acc = 0.0;
    for (const Vec& theta : samples) acc += sigmoid(dot(theta, x));
    const double p = smooth(acc / samples.size(), alpha);
    return Prediction{p, PredictorMode::McTheory};
}

Schedule corollary_schedule(int n, double delta) {
    if (n < 1) throw std::invalid_argument("corollary_schedule: n >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("corollary_schedule: delta in (0,1)");
    Schedule s;
    s.n = n;
    s.delta = delta;
    const double nd = n;
    s.alpha_t = 1.0 / (2.0 * nd);
    s.eps_t = 1.0 / (20.0 * nd * nd * nd);
    s.delta_t = delta / nd;
    s.s_t = static_cast<long long>(std::ceil(32.0 * nd * nd * nd * std::log(nd / delta)));
    if (!(s.alpha_t * static_cast<double>(s.s_t) >= 16.0 * std::log(1.0 / s.delta_t)))
        throw std::logic_error("corollary_schedule: alpha_t s_t >= 16 log(1/delta_t) violated");
    return s;
}

Prediction ogd_predict_update(OgdState& state, const LabeledExample& example) {
    const double p = sigmoid(dot(state.theta, example.x));
    state.t += 1;
    const double eta = state.fixed_eta ? *state.fixed_eta
                                       : state.B / (state.R * std::sqrt(static_cast<double>(state.t)));
    const double z = example.y * dot(state.theta, example.x);
    const double gscale = loss_grad_scalar(z) * example.y;
    axpy(-eta * gscale, example.x, state.theta);
    const double nrm = norm2(state.theta);
    if (nrm > state.B) scale(state.B / nrm, state.theta);
    return Prediction{p, PredictorMode::Baseline};
}

OnsState OnsState::init(std::size_t d, double B, double R, double eps_A, double gamma_ons) {
    OnsState s;
    s.theta.assign(d, 0.0);
    s.A.assign(d * d, 0.0);
    s.A_inv.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        s.A[i * d + i] = eps_A;
        s.A_inv[i * d + i] = 1.0 / eps_A;
    }
    s.B = B;
    s.R = R;
    s.eps_A = eps_A;
    s.gamma_ons = gamma_ons > 0.0 ? gamma_ons : 0.5 * std::min(1.0 / (4.0 * R * B), 1.0);
    return s;
}

namespace {

// argmin_{|w| <= B} (w - target)^T A (w - target): bisection on the
// multiplier of (A + mu I) w = A target.
Vec generalized_projection(const std::vector<double>& A, std::size_t d, const Vec& target, double B) {
    Vec at(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) at[i] = dot({A.data() + i * d, d}, target);
    double hi = norm2(at) / B;
    double lo = 0.0;
    Vec w(d);
    std::vector<double> M(d * d);
    for (int it = 0; it < 200; ++it) {
        const double mu = (it == 0) ? hi : 0.5 * (lo + hi);
        M = A;
        for (std::size_t i = 0; i < d; ++i) M[i * d + i] += mu;
        w = at;
        if (!cholesky(M, d)) throw std::runtime_error("ons: projection system not PD");
        cholesky_solve(M, d, w);
        const double nrm = norm2(w);
        if (it > 0) {
            if (nrm > B)
                lo = mu;
            else
                hi = mu;
        }
        if (std::abs(nrm - B) <= 1e-12 * B || (hi - lo) <= 1e-15 * hi) break;
    }
    return w;
}

}  // namespace

Prediction ons_predict_update(OnsState& state, const LabeledExample& example) {
    const std::size_t d = state.theta.size();
    const double p = sigmoid(dot(state.theta, example.x));
    state.t += 1;

    const double z = example.y * dot(state.theta, example.x);
    Vec g = scaled(example.x, loss_grad_scalar(z) * example.y);

    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) state.A[i * d + j] += g[i] * g[j];

    // Sherman-Morrison on the inverse
    Vec ainv_g(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) ainv_g[i] = dot({state.A_inv.data() + i * d, d}, g);
    const double denom = 1.0 + dot(g, ainv_g);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) state.A_inv[i * d + j] -= ainv_g[i] * ainv_g[j] / denom;

    Vec newton(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) newton[i] = dot({state.A_inv.data() + i * d, d}, g);
    Vec cand = state.theta;
    axpy(-1.0 / state.gamma_ons, newton, cand);

    if (norm2(cand) > state.B) {
        state.theta = generalized_projection(state.A, d, cand, state.B);
    } else {
        state.theta = std::move(cand);
    }
    return Prediction{p, PredictorMode::Baseline};
}

namespace {

bool inside_cone(const ConeSlice& cone, std::span<const double> theta) {
    for (const Vec& row : cone.rows) {
        const double m = dot(row, theta);
        if (cone.gamma > 0.0 ? m < cone.gamma : m <= 0.0) return false;
    }
    return true;
}

double favorable_weight(std::span<const double> x, std::span<const double> theta) {
    const double v = dot(x, theta);
    if (v > 0.0) return 1.0;
    if (v == 0.0) return 0.5;  // tie set; zero mass except for degenerate queries
    return 0.0;
}

double hit_and_run_estimate(const ConeSlice& cone, std::span<const double> x, long mc,
                            const SolidAngleOptions& opts, SplitMix64& rng) {
    const std::size_t d = cone.dim();
    // strictly feasible start from the unit-margin slice
    ConeSlice feas = cone;
    feas.gamma = std::max(1.0, 2.0 * cone.gamma);
    const SvmSolution sol = min_norm_point(feas);
    if (!sol.feasible) throw std::runtime_error("solid_angle_predict: cone feasibility check failure");
    Vec theta = sol.theta;

    const long total = opts.hit_and_run_burn_in + mc;
    double favorable = 0.0;
    for (long step = 0; step < total; ++step) {
        const Vec dir = sample_unit_sphere(static_cast<int>(d), rng);
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (const Vec& row : cone.rows) {
            const double num = cone.gamma - dot(row, theta);
            const double den = dot(row, dir);
            if (std::abs(den) < 1e-300) {
                if (num > 0.0) lo = 1.0, hi = 0.0;  // infeasible direction row; force skip
                continue;
            }
            const double bound = num / den;
            if (den > 0.0)
                lo = std::max(lo, bound);
            else
                hi = std::min(hi, bound);
        }
        if (lo < hi) {
            // standard Gaussian along the line: s ~ N(-<theta,dir>, 1) on [lo,hi]
            const double mu = -dot(theta, dir);
            const double a = normal_cdf(lo - mu), b = normal_cdf(hi - mu);
            if (b - a > 1e-300) {
                const double u = a + (b - a) * rng.next_double_open();
                const double s = mu + normal_cdf_inv(std::min(1.0 - 1e-16, std::max(1e-16, u)));
                if (s > lo && s < hi) axpy(s, dir, theta);
            }
        }
        if (step >= opts.hit_and_run_burn_in) favorable += favorable_weight(x, theta);
    }
    return favorable / mc;
}

}  // namespace

Prediction solid_angle_predict(const ConeSlice& cone, std::span<const double> x, long mc_samples,
                               const SolidAngleOptions& opts) {
    const std::size_t d = cone.rows.empty() ? x.size() : cone.dim();
    if (x.size() != d) throw std::invalid_argument("solid_angle_predict: x dimension mismatch");
    bool x_zero = true;
    for (double v : x) x_zero = x_zero && v == 0.0;
    if (x_zero) return Prediction{0.5, PredictorMode::Exact};
    if (cone.rows.empty()) return Prediction{0.5, PredictorMode::Exact};  // full-space Gaussian symmetry

    SplitMix64 rng(opts.seed);
    double p;
    if (d <= 3) {
        // feasibility check up front so an empty cone fails loudly
        ConeSlice feas = cone;
        feas.gamma = std::max(1.0, 2.0 * cone.gamma);
        if (!min_norm_point(feas).feasible)
            throw std::runtime_error("solid_angle_predict: cone feasibility check failure");
        Vec theta(d);
        long accepted = 0, proposed = 0;
        double favorable = 0.0;
        bool bailed = false;
        while (accepted < mc_samples) {
            for (double& v : theta) v = rng.next_gaussian();
            ++proposed;
            if (inside_cone(cone, theta)) {
                ++accepted;
                favorable += favorable_weight(x, theta);
            }
            if (proposed >= 2'000'000 &&
                static_cast<double>(accepted) / proposed < opts.min_rejection_rate) {
                bailed = true;
                break;
            }
        }
        p = bailed ? hit_and_run_estimate(cone, x, mc_samples, opts, rng)
                   : favorable / static_cast<double>(mc_samples);
    } else {
        p = hit_and_run_estimate(cone, x, mc_samples, opts, rng);
    }
    return Prediction{std::clamp(p, 0.0, 1.0), PredictorMode::Exact};
}

}  // namespace ewlogit
