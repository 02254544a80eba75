#include <doctest.h>

#include <cmath>

#include "ewlogit/quadrature.hpp"
#include "ewlogit/sampler.hpp"

using namespace ewlogit;

namespace {

Target flat_target(std::size_t dim) {
    Target t;
    t.dim = dim;
    t.value = [](std::span<const double>) { return 0.0; };
    t.grad = [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
    return t;
}

PosteriorSpec prior_spec(std::size_t d, double B) {
    std::vector<LabeledExample> ex{{Vec(d, 0.1), +1}};
    PosteriorSpec s = make_posterior(PosteriorData::make(ex), 0, B);
    return s;
}

std::shared_ptr<const PosteriorData> small_data_1d(std::uint64_t seed, int n) {
    SplitMix64 rng(seed);
    std::vector<LabeledExample> ex;
    for (int i = 0; i < n; ++i)
        ex.push_back({Vec{2.0 * rng.next_double() - 1.0}, rng.next_double() < 0.5 ? +1 : -1});
    return PosteriorData::make(ex);
}

}  // namespace

TEST_CASE("mala on a flat potential accepts every proposal") {
    const Target t = flat_target(2);
    ChainState st = ChainState::init(Vec{0.0, 0.0}, 0.5, 123);
    for (int i = 0; i < 1000; ++i) mala_step(t, st);
    CHECK(st.proposed == 1000);
    CHECK(st.accepted == 1000);
}

TEST_CASE("mala acceptance approaches one as h -> 0") {
    const PosteriorSpec spec = prior_spec(1, 1.0);
    ChainState st = ChainState::init(Vec{0.3}, 1e-6, 7);
    for (int i = 0; i < 10000; ++i) mala_step(spec, st);
    CHECK(static_cast<double>(st.accepted) / st.proposed >= 0.999);
}

TEST_CASE("mala stationarity on the exact Gaussian prior (d=1, B=1)") {
    const PosteriorSpec spec = prior_spec(1, 1.0);
    ChainState st = ChainState::init(Vec{0.0}, 1.0, 99);
    adapt_step_size(spec, st, 1.0);
    double sum = 0.0, sum2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        mala_step(spec, st);
        sum += st.theta[0];
        sum2 += st.theta[0] * st.theta[0];
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) <= 0.02);
    CHECK(std::abs(var - 1.0) <= 0.05);
}

TEST_CASE("build_ladder") {
    const LadderSchedule l = build_ladder(1.0, 10.0, 0.02, 0.5);
    CHECK(l.delta == doctest::Approx(0.05));
    CHECK(l.K == 20);
    CHECK(l.rung_budget == doctest::Approx(0.001));

    // R*B below c_delta: single rung
    const LadderSchedule cap = build_ladder(0.1, 1.0, 0.5, 0.5);
    CHECK(cap.delta == doctest::Approx(1.0));
    CHECK(cap.K == 1);

    CHECK_THROWS_AS(build_ladder(1.0, 1.0, 0.1, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(build_ladder(1.0, 1.0, -0.1, 0.5), std::invalid_argument);
}

TEST_CASE("step_count_for_accuracy") {
    CHECK(step_count_for_accuracy(1.0, 1, std::exp(-1.0), 1) == 1);
    // floor at one step when log(K/eps) <= 0
    CHECK(step_count_for_accuracy(1.0, 1, 0.9, 1) == 1);
    // linear in kappa up to ceiling
    const int n1 = step_count_for_accuracy(8.0, 2, 0.01, 10);
    const int n2 = step_count_for_accuracy(16.0, 2, 0.01, 10);
    CHECK(n2 >= 2 * n1 - 1);
    CHECK(n2 <= 2 * n1 + 1);
    // monotone in 1/eps
    CHECK(step_count_for_accuracy(4.0, 2, 0.001, 10) >= step_count_for_accuracy(4.0, 2, 0.01, 10));
}

TEST_CASE("initial_step_size follows the h_t formula") {
    CHECK(initial_step_size(0, 1.0, 1.0) == doctest::Approx(1.0 / 1.001).epsilon(1e-12));
    CHECK(initial_step_size(4, 2.0, 1.0) == doctest::Approx(1.0 / 5.001).epsilon(1e-12));
}

TEST_CASE("bridge_round bookkeeping and the trivial bridge") {
    auto data = small_data_1d(5, 3);
    PosteriorSpec spec = make_posterior(data, 3, 2.0);

    LadderSchedule empty;
    empty.K = 1;
    empty.delta = 1.0;
    empty.steps_per_rung = 0;
    ChainState st = ChainState::init(Vec{0.4}, 0.5, 11);
    const Vec before = st.theta;
    const BridgeStats bs = bridge_round(st, spec, empty);
    CHECK(st.theta == before);
    CHECK(bs.transitions == 0);

    LadderSchedule l;
    l.K = 20;
    l.delta = 0.05;
    l.steps_per_rung = 30;
    const BridgeStats bs2 = bridge_round(st, spec, l);
    CHECK(bs2.transitions == 600);  // Q = K * N_rung
}

TEST_CASE("adapt_step_size reaches the target window on a 2-D Gaussian") {
    const PosteriorSpec spec = prior_spec(2, 1.0);
    ChainState st = ChainState::init(Vec{0.0, 0.0}, 1.0, 42);
    const AdaptResult res = adapt_step_size(spec, st, 1.0);
    CHECK(res.reached_window);
    // measurement window after adaptation
    std::uint64_t acc0 = st.accepted, prop0 = st.proposed;
    for (int i = 0; i < 200; ++i) mala_step(spec, st);
    const double rate = static_cast<double>(st.accepted - acc0) / (st.proposed - prop0);
    CHECK(rate >= 0.45);  // window [0.55, 0.80] with a Monte Carlo cushion
    CHECK(rate <= 0.90);
}

TEST_CASE("identical seeds give bit-identical trajectories") {
    auto data = small_data_1d(21, 4);
    PosteriorSpec spec = make_posterior(data, 4, 1.5);
    ChainState a = ChainState::init(Vec{0.2}, 0.3, 777);
    ChainState b = ChainState::init(Vec{0.2}, 0.3, 777);
    for (int i = 0; i < 500; ++i) {
        mala_step(spec, a);
        mala_step(spec, b);
        REQUIRE(a.theta == b.theta);
    }
    CHECK(a.accepted == b.accepted);
}

TEST_CASE("draw_iid_samples with s=1 reduces to bridge_round") {
    auto data = small_data_1d(33, 2);
    PosteriorSpec spec = make_posterior(data, 2, 1.0);
    LadderSchedule l = build_ladder(1.0, 1.0, 0.01, 0.5);
    l.steps_per_rung = 8;

    ChainState solo = ChainState::init(Vec{0.1}, 0.4, 999);
    std::vector<ChainState> chains{solo};
    const auto samples = draw_iid_samples(chains, spec, l, 1);
    bridge_round(solo, spec, l);
    CHECK(samples.size() == 1);
    CHECK(samples[0] == solo.theta);
}

TEST_CASE("chains from split streams are uncorrelated") {
    auto data = small_data_1d(3, 2);
    PosteriorSpec spec = make_posterior(data, 2, 1.0);
    LadderSchedule l = build_ladder(1.0, 1.0, 0.05, 0.5);
    l.steps_per_rung = 10;

    // lag-1 sample correlation across the chain index; at s = 2000 the null
    // standard error is ~0.022, so 0.1 is a > 4 sigma bound
    for (const int s : {200, 2000}) {
        SplitMix64 master(2025);
        std::vector<ChainState> chains;
        for (int i = 0; i < s; ++i) {
            SplitMix64 rng = master.split();
            Vec theta0{rng.next_gaussian()};
            chains.push_back(ChainState::init(std::move(theta0), 0.6, rng.next_u64()));
        }
        const auto samples = draw_iid_samples(chains, spec, l, s);
        double m = 0.0;
        for (const auto& v : samples) m += v[0];
        m /= s;
        double num = 0.0, den = 0.0;
        for (int i = 0; i < s; ++i) den += (samples[i][0] - m) * (samples[i][0] - m);
        for (int i = 0; i + 1 < s; ++i) num += (samples[i][0] - m) * (samples[i + 1][0] - m);
        CHECK(std::abs(num / den) <= 0.1);
    }
}

TEST_CASE("practical sampler retains exactly S samples per round") {
    auto data = small_data_1d(55, 5);
    PracticalSampler sampler(1, 2.0, 31337);
    for (std::size_t t = 1; t <= 5; ++t) {
        PosteriorSpec spec = make_posterior(data, t - 1, 2.0);
        PracticalRoundStats stats;
        const auto samples = sampler.round(spec, 1.0, &stats);
        CHECK(samples.size() == 24);
        CHECK(stats.transitions > 0);
        CHECK(stats.h > 0.0);
    }
}

TEST_CASE("TV budget ledger accumulates exactly") {
    TvBudgetLedger ledger;
    double direct = 0.0;
    for (int t = 1; t <= 50; ++t) {
        const double eps = 1.0 / (20.0 * t);
        RoundBudget rb = ledger.begin_round(eps);
        CHECK(rb.err_inherited == ledger.cumulative);
        ledger.commit(rb, 10);
        direct += eps;
    }
    CHECK(ledger.cumulative == direct);
    CHECK(ledger.transitions == 500);
}

TEST_CASE("bridged chains track the posterior across rounds (histogram TV)") {
    // err_t <= sum eps_i; an empirical histogram of many bridged chains
    // against the quadrature density should stay within that budget plus
    // the Monte-Carlo + binning slack.
    auto data = small_data_1d(77, 5);
    const double B = 2.0;
    const double R = data->max_norm();
    const double eps = 0.01;
    const int n_chains = 20000;

    SplitMix64 master(4096);
    std::vector<ChainState> chains;
    chains.reserve(n_chains);
    for (int i = 0; i < n_chains; ++i) {
        SplitMix64 rng = master.split();
        Vec theta0{B * rng.next_gaussian()};
        chains.push_back(ChainState::init(std::move(theta0), 0.5, rng.next_u64()));
    }

    for (std::size_t t = 2; t <= 5; ++t) {
        PosteriorSpec spec_t = make_posterior(data, t - 1, B);
        LadderSchedule l = build_ladder(R, B, eps, 0.5);
        l.steps_per_rung = step_count_for_accuracy(constants(spec_t, R).kappa, 1, eps, l.K);
        for (auto& c : chains) adapt_step_size(spec_t, c, R);
        draw_iid_samples(chains, spec_t, l, n_chains);
    }

    // histogram TV against quadrature rho_5
    PosteriorSpec spec = make_posterior(data, 4, B);
    const double logz = log_partition(spec);
    const int bins = 50;
    const double lo = -4.0 * B, hi = 4.0 * B, w = (hi - lo) / bins;
    std::vector<double> emp(bins, 0.0);
    for (const auto& c : chains) {
        const int b = static_cast<int>((c.theta[0] - lo) / w);
        if (b >= 0 && b < bins) emp[b] += 1.0 / n_chains;
    }
    double tv = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double a = lo + b * w;
        const double pmass = integrate_adaptive(
            [&](double x) { return std::exp(-potential(spec, Vec{x}) - logz); }, a, a + w, 1e-9);
        tv += 0.5 * std::abs(emp[b] - pmass);
    }
    CHECK(tv <= 4 * eps + 0.05);
}
