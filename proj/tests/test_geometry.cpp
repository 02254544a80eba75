#include <doctest.h>

#include <cmath>

#include "ewlogit/geometry.hpp"
#include "ewlogit/quadrature.hpp"
#include "ewlogit/rng.hpp"

using namespace ewlogit;

namespace {

// random separable instance: margins along a random unit direction
std::vector<LabeledExample> random_separable(int d, int m, SplitMix64& rng, Vec* u_out = nullptr) {
    Vec u = sample_unit_sphere(d, rng);
    std::vector<LabeledExample> data;
    for (int i = 0; i < m; ++i) {
        const double margin = 0.1 + 0.9 * rng.next_double();
        Vec x = sample_unit_sphere(d, rng);
        const double along = dot(x, u);
        axpy(margin - along, u, x);
        const int y = rng.next_double() < 0.5 ? +1 : -1;
        if (y < 0) scale(-1.0, x);
        data.push_back({std::move(x), y});
    }
    if (u_out) *u_out = u;
    return data;
}

ConeSlice slice_of(const std::vector<LabeledExample>& data, double gamma) {
    ConeSlice cone = cone_from_examples(data, gamma);
    return cone;
}

}  // namespace

TEST_CASE("min_norm_point on half-spaces with known projections") {
    // single constraint x = e1, y = +1, gamma = 1: theta = e1
    ConeSlice one;
    one.rows.push_back(Vec{1.0, 0.0});
    one.gamma = 1.0;
    const SvmSolution s1 = min_norm_point(one);
    CHECK(s1.feasible);
    CHECK(s1.theta[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s1.theta[1] == doctest::Approx(0.0));
    CHECK(s1.w[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s1.margin_norm == doctest::Approx(1.0).epsilon(1e-9));

    // corner of the quadrant slice at gamma = 2: theta = (2,2), w = (1,1)
    ConeSlice quad;
    quad.rows.push_back(Vec{1.0, 0.0});
    quad.rows.push_back(Vec{0.0, 1.0});
    quad.gamma = 2.0;
    const SvmSolution s2 = min_norm_point(quad);
    CHECK(s2.feasible);
    CHECK(s2.theta[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(s2.theta[1] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(s2.w[0] == doctest::Approx(1.0).epsilon(1e-8));

    CHECK_THROWS_AS(min_norm_point(slice_of({}, 0.0)), std::invalid_argument);  // gamma must be > 0

    // infeasible (non-separable) slice
    ConeSlice bad;
    bad.rows.push_back(Vec{1.0, 0.0});
    bad.rows.push_back(Vec{-1.0, 0.0});
    bad.gamma = 1.0;
    CHECK_FALSE(min_norm_point(bad).feasible);
}

TEST_CASE("scaling law theta(gamma) = gamma * theta(1)") {
    SplitMix64 rng(41);
    const auto data = random_separable(3, 6, rng);
    const SvmSolution base = min_norm_point(slice_of(data, 1.0));
    REQUIRE(base.feasible);
    for (double gamma : {0.5, 1.0, 3.0}) {
        const SvmSolution s = min_norm_point(slice_of(data, gamma));
        REQUIRE(s.feasible);
        for (std::size_t j = 0; j < s.theta.size(); ++j)
            CHECK(s.theta[j] == doctest::Approx(gamma * base.theta[j]).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("slice membership scaling: theta in S_gamma iff theta/gamma in S_1") {
    SplitMix64 rng(43);
    const auto data = random_separable(3, 5, rng);
    const ConeSlice s1 = slice_of(data, 1.0);
    const ConeSlice s25 = slice_of(data, 2.5);
    auto inside = [](const ConeSlice& c, const Vec& th) {
        for (const auto& row : c.rows)
            if (dot(row, th) < c.gamma) return false;
        return true;
    };
    for (int i = 0; i < 500; ++i) {
        Vec th{4.0 * rng.next_gaussian(), 4.0 * rng.next_gaussian(), 4.0 * rng.next_gaussian()};
        Vec th_scaled = scaled(th, 1.0 / 2.5);
        CHECK(inside(s25, th) == inside(s1, th_scaled));
    }
}

TEST_CASE("mode identity: truncated Gaussian mode = gamma * w_svm (d in {2,3,5})") {
    SplitMix64 rng(47);
    for (int d : {2, 3, 5}) {
        for (int rep = 0; rep < 17; ++rep) {
            const auto data = random_separable(d, 4 + rep % 5, rng);
            const double gamma = 0.3 + 2.0 * rng.next_double();
            const ConeSlice slice = slice_of(data, gamma);
            const Vec mode = truncated_gaussian_mode(slice);
            const SvmSolution svm = min_norm_point(slice_of(data, 1.0));
            REQUIRE(svm.feasible);
            for (int j = 0; j < d; ++j)
                CHECK(mode[j] == doctest::Approx(gamma * svm.w[j]).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("mode direction independent of gamma") {
    SplitMix64 rng(53);
    const auto data = random_separable(3, 6, rng);
    const Vec m1 = unit(truncated_gaussian_mode(slice_of(data, 1.0)));
    const Vec m7 = unit(truncated_gaussian_mode(slice_of(data, 7.0)));
    double cosang = dot(m1, m7);
    CHECK(std::acos(std::min(1.0, cosang)) <= 1e-7);
}

TEST_CASE("mode maximizes the standard Gaussian density over the slice (d=2)") {
    SplitMix64 rng(59);
    const auto data = random_separable(2, 5, rng);
    const ConeSlice slice = slice_of(data, 1.0);
    const Vec mode = truncated_gaussian_mode(slice);
    const double mode_density = std::exp(-0.5 * sqnorm(mode));
    // random feasible points via rejection around the mode
    int found = 0;
    while (found < 1000) {
        Vec cand{mode[0] + 2.0 * rng.next_gaussian(), mode[1] + 2.0 * rng.next_gaussian()};
        bool ok = true;
        for (const auto& row : slice.rows) ok = ok && dot(row, cand) >= slice.gamma;
        if (!ok) continue;
        ++found;
        CHECK(std::exp(-0.5 * sqnorm(cand)) <= mode_density * (1.0 + 1e-9));
    }
}

TEST_CASE("margin_report on the single-point instance") {
    std::vector<LabeledExample> data{{Vec{1.0, 0.0}, +1}};
    const Vec u{1.0, 0.0};
    const MarginReport rep = margin_report(data, u, 2);
    CHECK(rep.separable);
    CHECK(rep.gamma == doctest::Approx(1.0));
    CHECK(rep.R == doctest::Approx(1.0));
    CHECK(rep.gamma_bar == doctest::Approx(1.0));
    CHECK(rep.t0 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(rep.t1 == doctest::Approx(0.5 * (1.0 + 1.0 / std::sqrt(2.0))).epsilon(1e-12));
    // B_critic = 2(2+sqrt 2) log 4 / (1 * sqrt(1)) = 9.46621...
    CHECK(rep.B_critic == doctest::Approx(9.46621).epsilon(2e-4));
    // alpha(t1) and lambda0 from their definitions
    const double a = rep.gamma * rep.t1 - rep.R * std::sqrt(1.0 - rep.t1 * rep.t1);
    CHECK(rep.alpha_t1 == doctest::Approx(a));
    CHECK(rep.lambda0 == doctest::Approx(std::log(4.0) / a));

    CHECK_THROWS_AS(margin_report(data, Vec{0.0, 0.0}, 2), std::invalid_argument);

    // non-separable data flagged
    std::vector<LabeledExample> mixed{{Vec{1.0, 0.0}, +1}, {Vec{1.0, 0.0}, -1}};
    CHECK_FALSE(margin_report(mixed, u, 2).separable);

    // d = 1 threshold path
    std::vector<LabeledExample> d1{{Vec{0.5}, +1}};
    const MarginReport rep1 = margin_report(d1, Vec{1.0}, 4);
    CHECK(rep1.B_critic == doctest::Approx(6.8284271247461903 * std::log(8.0) / 0.5).epsilon(1e-12));
}

TEST_CASE("alpha(t1) >= gamma/(2(2+sqrt 2)) on random separable instances") {
    SplitMix64 rng(61);
    const double denom = 2.0 * (2.0 + std::sqrt(2.0));
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 2 + static_cast<int>(rng.next_double() * 4);
        Vec u;
        const auto data = random_separable(d, 3 + rep % 7, rng, &u);
        const MarginReport r = margin_report(data, u, static_cast<int>(data.size()));
        REQUIRE(r.separable);
        CHECK(r.alpha_t1 >= r.gamma / denom - 1e-12);
    }
}

TEST_CASE("cap_probability_check") {
    // hemisphere
    const CapCheck c0 = cap_probability_check(3, 0.0, 200000, 71);
    CHECK(std::abs(c0.empirical - 0.5) <= 3.0 * c0.std_error + 1e-12);
    CHECK(c0.lower_bound <= 0.5);

    // d = 2, t = 0.5: exact arc fraction arccos(0.5)/pi = 1/3, bound ~0.27566
    const CapCheck c2 = cap_probability_check(2, 0.5, 400000, 73);
    CHECK(c2.lower_bound == doctest::Approx((1.0 / M_PI) * std::sqrt(0.75)).epsilon(1e-12));
    CHECK(std::abs(c2.empirical - 1.0 / 3.0) <= 3.0 * c2.std_error);
    CHECK(c2.empirical >= c2.lower_bound - 3.0 * c2.std_error);

    // bound decreasing in t
    double prev = 1.0;
    for (double t : {0.0, 0.2, 0.4, 0.6, 0.8}) {
        const double b = cap_lower_bound_constant(4) * std::pow(1.0 - t * t, 1.5);
        CHECK(b <= prev);
        prev = b;
    }
}

TEST_CASE("cone_cap_inclusion_check") {
    SplitMix64 rng(79);
    Vec u;
    const auto data = random_separable(3, 6, rng, &u);
    const MarginReport rep = margin_report(data, u, static_cast<int>(data.size()));
    REQUIRE(rep.separable);

    // v = u itself: margin gamma >= alpha(t1) trivially; full MC check
    const double t1 = rep.t1;
    CHECK(cone_cap_inclusion_check(data, u, t1, 10000, 83));

    // degenerate t1 -> 1: cap shrinks to {u}
    CHECK(cone_cap_inclusion_check(data, u, 1.0 - 1e-15, 100, 89));
}

TEST_CASE("cumulative_loss_bound branches") {
    std::vector<LabeledExample> data{{Vec{0.5, 0.0}, +1}};
    const MarginReport rep = margin_report(data, Vec{1.0, 0.0}, 8);
    REQUIRE(rep.separable);

    const int d = 2;
    const double big_b = rep.lambda0 / std::sqrt(d - 1.0) + 1.0;
    const double small_b = rep.lambda0 / std::sqrt(d - 1.0) / 4.0;
    const double bound_big = cumulative_loss_bound(rep, big_b, d);
    const double bound_small = cumulative_loss_bound(rep, small_b, d);
    // large-B branch: (d-1) log(2/gamma_bar) + log 2 - log c_d + 1
    const double expect_big = std::log(2.0 / rep.gamma_bar) + std::log(2.0) -
                              std::log(cap_lower_bound_constant(d)) + 1.0;
    CHECK(bound_big == doctest::Approx(expect_big).epsilon(1e-12));
    CHECK(bound_small > bound_big);  // radial penalty kicks in below the threshold

    // halving gamma_bar adds exactly (d-1) log 2 in the large-B branch
    MarginReport half = rep;
    half.gamma_bar *= 0.5;
    CHECK(cumulative_loss_bound(half, big_b, d) - bound_big == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // gamma_bar = 2 (formally) has zero angular term
    MarginReport two = rep;
    two.gamma_bar = 2.0;
    CHECK(cumulative_loss_bound(two, big_b, d) ==
          doctest::Approx(std::log(2.0) - std::log(cap_lower_bound_constant(d)) + 1.0).epsilon(1e-12));
}

TEST_CASE("radial median fact: P(chi^2_d >= d-1) >= 1/2 empirically") {
    SplitMix64 rng(97);
    for (int d = 2; d <= 10; ++d) {
        long hits = 0;
        const long n = 100000;
        for (long i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                const double g = rng.next_gaussian();
                s += g * g;
            }
            if (s >= d - 1.0) ++hits;
        }
        CHECK(static_cast<double>(hits) / n >= 0.5);
    }
}

TEST_CASE("single-constraint truncated Gaussians: TV(gamma-slice, cone) decreases to 0 (d=2)") {
    // 2-D tensor quadrature of |rho_gamma - rho_0| / 2 for the cone {theta_1 > 0}
    auto tv_at = [](double gamma) {
        const GaussRule& gl = gauss_legendre(64);
        const double H = 8.0;
        double num = 0.0, z0 = 0.0, zg = 0.0;
        for (int i = 0; i < 64; ++i) {
            const double x1 = H * gl.nodes[i];
            const double w1 = H * gl.weights[i];
            for (int j = 0; j < 64; ++j) {
                const double x2 = H * gl.nodes[j];
                const double w2 = H * gl.weights[j];
                const double dens = std::exp(-0.5 * (x1 * x1 + x2 * x2));
                if (x1 > 0.0) z0 += w1 * w2 * dens;
                if (x1 >= gamma) zg += w1 * w2 * dens;
            }
        }
        for (int i = 0; i < 64; ++i) {
            const double x1 = H * gl.nodes[i];
            const double w1 = H * gl.weights[i];
            for (int j = 0; j < 64; ++j) {
                const double x2 = H * gl.nodes[j];
                const double w2 = H * gl.weights[j];
                const double dens = std::exp(-0.5 * (x1 * x1 + x2 * x2));
                const double p0 = x1 > 0.0 ? dens / z0 : 0.0;
                const double pg = x1 >= gamma ? dens / zg : 0.0;
                num += w1 * w2 * std::abs(p0 - pg);
            }
        }
        return 0.5 * num;
    };
    double prev = 1.0;
    for (double gamma : {0.3, 0.1, 0.01, 1e-3}) {
        const double tv = tv_at(gamma);
        CHECK(tv <= prev + 1e-9);
        prev = tv;
    }
    CHECK(prev <= 0.01);
}
