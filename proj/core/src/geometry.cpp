#include "ewlogit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ewlogit {

ConeSlice cone_from_examples(std::span<const LabeledExample> examples, double gamma) {
    ConeSlice cone;
    cone.gamma = gamma;
    for (const auto& e : examples) cone.add(e);
    return cone;
}

SvmSolution min_norm_point(const ConeSlice& cone, const DykstraOptions& opts) {
    if (!(cone.gamma > 0.0)) throw std::invalid_argument("min_norm_point: gamma must be > 0");
    const std::size_t d = cone.dim();
    const std::size_t m = cone.rows.size();
    SvmSolution sol;
    if (m == 0) {
        sol.theta.assign(d, 0.0);
        sol.w.assign(d, 0.0);
        sol.margin_norm = 0.0;
        sol.feasible = true;
        return sol;
    }

    std::vector<double> sqnorms(m);
    for (std::size_t i = 0; i < m; ++i) {
        sqnorms[i] = sqnorm(cone.rows[i]);
        if (!(sqnorms[i] > 0.0)) throw std::invalid_argument("min_norm_point: zero constraint row");
    }

    Vec x(d, 0.0), x_prev(d, 0.0), y(d, 0.0);
    std::vector<Vec> corr(m, Vec(d, 0.0));
    const double diverge_cap = 1e9 * cone.gamma;
    bool converged = false;

    for (long cycle = 0; cycle < opts.max_iter; ++cycle) {
        x_prev = x;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < d; ++j) y[j] = x[j] + corr[i][j];
            const double slack = cone.gamma - dot(cone.rows[i], y);
            if (slack > 0.0) {
                const double c = slack / sqnorms[i];
                for (std::size_t j = 0; j < d; ++j) x[j] = y[j] + c * cone.rows[i][j];
            } else {
                x = y;
            }
            for (std::size_t j = 0; j < d; ++j) corr[i][j] = y[j] - x[j];
        }
        double delta = 0.0, viol = 0.0;
        for (std::size_t j = 0; j < d; ++j) delta = std::max(delta, std::abs(x[j] - x_prev[j]));
        for (std::size_t i = 0; i < m; ++i) viol = std::max(viol, cone.gamma - dot(cone.rows[i], x));
        const double scale = std::max(1.0, norm2(x));
        if (delta <= opts.tol * scale && viol <= 1e2 * opts.tol * std::max(1.0, cone.gamma)) {
            converged = true;
            break;
        }
        if (norm2(x) > diverge_cap) break;
    }

    double viol = 0.0;
    for (std::size_t i = 0; i < m; ++i) viol = std::max(viol, cone.gamma - dot(cone.rows[i], x));
    sol.feasible = converged && viol <= 1e-7 * std::max(1.0, cone.gamma);
    sol.theta = x;
    sol.w = scaled(x, 1.0 / cone.gamma);
    sol.margin_norm = norm2(sol.w);
    return sol;
}

Vec truncated_gaussian_mode(const ConeSlice& cone, const DykstraOptions& opts) {
    SvmSolution sol = min_norm_point(cone, opts);
    if (!sol.feasible) throw std::runtime_error("truncated_gaussian_mode: slice is infeasible");
    return sol.theta;
}

MarginReport margin_report(std::span<const LabeledExample> data, std::span<const double> u, int n,
                           double k_d1) {
    const double un = norm2(u);
    if (!(un > 0.0)) throw std::invalid_argument("margin_report: zero-norm direction");
    Vec uhat(u.begin(), u.end());
    for (double& v : uhat) v /= un;

    MarginReport rep;
    rep.d = static_cast<int>(u.size());
    rep.n = n;
    rep.gamma = std::numeric_limits<double>::infinity();
    for (const auto& e : data) {
        rep.gamma = std::min(rep.gamma, e.y * dot(e.x, uhat));
        rep.R = std::max(rep.R, norm2(e.x));
    }
    if (data.empty()) rep.gamma = 0.0;
    rep.separable = rep.gamma > 0.0;
    if (!rep.separable) {
        rep.gamma_bar = rep.t0 = rep.t1 = rep.alpha_t1 = rep.lambda0 = rep.B_critic =
            std::numeric_limits<double>::quiet_NaN();
        return rep;
    }
    rep.gamma_bar = rep.gamma / rep.R;
    rep.t0 = 1.0 / std::sqrt(1.0 + rep.gamma_bar * rep.gamma_bar);
    rep.t1 = 0.5 * (1.0 + rep.t0);
    rep.alpha_t1 = rep.gamma * rep.t1 - rep.R * std::sqrt(1.0 - rep.t1 * rep.t1);
    const double log2n = std::log(2.0 * n);
    rep.lambda0 = log2n / rep.alpha_t1;
    if (rep.d >= 2) {
        rep.B_critic = 2.0 * (2.0 + std::sqrt(2.0)) * log2n / (rep.gamma * std::sqrt(rep.d - 1.0));
    } else {
        rep.B_critic = k_d1 * log2n / rep.gamma;
    }
    return rep;
}

double cap_lower_bound_constant(int d) {
    if (d < 2) throw std::invalid_argument("cap_lower_bound_constant: d >= 2");
    return std::exp(std::lgamma(0.5 * d) - std::lgamma(0.5 * (d - 1))) /
           ((d - 1.0) * std::sqrt(M_PI));
}

Vec sample_unit_sphere(int d, SplitMix64& rng) {
    Vec v(d);
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (double& c : v) {
            c = rng.next_gaussian();
            n2 += c * c;
        }
    } while (n2 == 0.0);
    const double inv = 1.0 / std::sqrt(n2);
    for (double& c : v) c *= inv;
    return v;
}

CapCheck cap_probability_check(int d, double t, long mc, std::uint64_t seed) {
    if (d < 2) throw std::invalid_argument("cap_probability_check: d >= 2");
    if (!(t >= 0.0 && t < 1.0)) throw std::invalid_argument("cap_probability_check: t in [0,1)");
    SplitMix64 rng(seed);
    long hits = 0;
    for (long i = 0; i < mc; ++i) {
        // <U, e_1> has the marginal law of any fixed direction
        const Vec v = sample_unit_sphere(d, rng);
        if (v[0] >= t) ++hits;
    }
    CapCheck c;
    c.empirical = static_cast<double>(hits) / mc;
    c.lower_bound = cap_lower_bound_constant(d) * std::pow(1.0 - t * t, 0.5 * (d - 1));
    c.std_error = std::sqrt(std::max(c.empirical * (1.0 - c.empirical), 1e-12) / mc);
    return c;
}

Vec sample_cap_direction(std::span<const double> u, double t1, SplitMix64& rng) {
    const int d = static_cast<int>(u.size());
    if (d < 2) throw std::invalid_argument("sample_cap_direction: d >= 2");
    if (!(t1 > 0.0 && t1 <= 1.0)) throw std::invalid_argument("sample_cap_direction: t1 in (0,1]");
    const double phi_max = std::acos(std::min(1.0, t1));
    double phi = 0.0;
    if (phi_max > 0.0) {
        if (d == 2) {
            phi = phi_max * rng.next_double();
        } else {
            // density on [0, phi_max] proportional to sin^{d-2}(phi);
            // sin is increasing here (phi_max <= pi/2 for t1 > 0)
            const double env = std::pow(std::sin(phi_max), d - 2);
            for (;;) {
                const double cand = phi_max * rng.next_double();
                if (rng.next_double() * env <= std::pow(std::sin(cand), d - 2)) {
                    phi = cand;
                    break;
                }
            }
        }
    }
    // orthonormal direction w in the u-perp subspace
    Vec w(d, 0.0);
    double wn = 0.0;
    do {
        for (int i = 0; i < d; ++i) w[i] = rng.next_gaussian();
        const double proj = dot(w, u);
        axpy(-proj, u, w);
        wn = norm2(w);
    } while (wn < 1e-12);
    for (double& c : w) c /= wn;

    Vec v(d);
    const double cp = std::cos(phi), sp = std::sin(phi);
    for (int i = 0; i < d; ++i) v[i] = cp * u[i] + sp * w[i];
    return v;
}

bool cone_cap_inclusion_check(std::span<const LabeledExample> data, std::span<const double> u, double t1,
                              long mc, std::uint64_t seed) {
    const MarginReport rep = margin_report(data, u, std::max<std::size_t>(1, data.size()));
    if (!rep.separable) throw std::invalid_argument("cone_cap_inclusion_check: data not separated by u");
    const double alpha_t1 = rep.gamma * t1 - rep.R * std::sqrt(std::max(0.0, 1.0 - t1 * t1));
    Vec uhat = unit(u);
    SplitMix64 rng(seed);
    for (long s = 0; s < mc; ++s) {
        const Vec v = sample_cap_direction(uhat, t1, rng);
        double min_margin = std::numeric_limits<double>::infinity();
        for (const auto& e : data) min_margin = std::min(min_margin, e.y * dot(e.x, v));
        if (min_margin < alpha_t1 - 1e-10) return false;
    }
    return true;
}

double cumulative_loss_bound(const MarginReport& report, double B, int d) {
    if (!report.separable) throw std::invalid_argument("cumulative_loss_bound: non-separable report");
    if (d < 2) throw std::invalid_argument("cumulative_loss_bound: d >= 2");
    const double angular = (d - 1.0) * std::log(2.0 / report.gamma_bar);
    double rad;
    if (B >= report.lambda0 / std::sqrt(d - 1.0)) {
        rad = std::log(2.0);
    } else {
        const double r = report.lambda0 / B;
        rad = 0.5 * r * r + 1.5 + (0.5 * d - 1.0) * std::log(2.0) + std::lgamma(0.5 * d);
    }
    return angular - std::log(cap_lower_bound_constant(d)) + 1.0 + rad;
}

}  // namespace ewlogit
