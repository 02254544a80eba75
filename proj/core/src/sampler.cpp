#include "ewlogit/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "ewlogit/parallel.hpp"

namespace ewlogit {

Target make_target(const PosteriorSpec& spec) {
    Target t;
    t.dim = std::max<std::size_t>(1, spec.dim());
    t.value = [spec](std::span<const double> theta) { return potential(spec, theta); };
    t.grad = [spec](std::span<const double> theta, std::span<double> out) { grad_potential(spec, theta, out); };
    return t;
}

bool mala_step(const Target& target, ChainState& state) {
    const std::size_t d = state.theta.size();
    const double h = state.h;
    Vec grad_cur(d), prop(d), grad_prop(d);
    target.grad(state.theta, grad_cur);

    for (std::size_t i = 0; i < d; ++i)
        prop[i] = state.theta[i] - h * grad_cur[i] + std::sqrt(2.0 * h) * state.rng.next_gaussian();

    const double v_cur = target.value(state.theta);
    const double v_prop = target.value(prop);
    target.grad(prop, grad_prop);

    // log q(a|b) = -|a - b + h grad V(b)|^2 / (4h), constants cancel
    double fwd = 0.0, bwd = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double df = prop[i] - state.theta[i] + h * grad_cur[i];
        const double db = state.theta[i] - prop[i] + h * grad_prop[i];
        fwd += df * df;
        bwd += db * db;
    }
    const double log_alpha = -v_prop + v_cur + (fwd - bwd) / (4.0 * h);

    state.proposed += 1;
    const double u = state.rng.next_double_open();
    if (std::log(u) <= log_alpha) {
        state.theta = std::move(prop);
        state.accepted += 1;
        return true;
    }
    return false;
}

bool mala_step(const PosteriorSpec& spec, ChainState& state) { return mala_step(make_target(spec), state); }

LadderSchedule build_ladder(double R, double B, double eps_fresh, double c_delta) {
    if (!(c_delta > 0.0 && c_delta < 1.0)) throw std::invalid_argument("build_ladder: c_delta must be in (0,1)");
    if (!(eps_fresh > 0.0)) throw std::invalid_argument("build_ladder: eps_fresh must be > 0");
    LadderSchedule l;
    l.delta = std::min(1.0, c_delta / (R * B));
    l.K = static_cast<int>(std::ceil(1.0 / l.delta - 1e-12));
    l.rung_budget = eps_fresh / l.K;
    return l;
}

int step_count_for_accuracy(double kappa, int d, double eps, int K, double C) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("step_count_for_accuracy: eps must be in (0,1)");
    if (!(kappa >= 1.0)) throw std::invalid_argument("step_count_for_accuracy: kappa must be >= 1");
    const double lg = std::max(1.0, std::log(static_cast<double>(K) / eps));
    return static_cast<int>(std::ceil(C * std::sqrt(static_cast<double>(d)) * kappa * lg));
}

double initial_step_size(std::size_t prefix_len, double R, double B) {
    return 1.0 / (1e-3 + 0.25 * R * R * static_cast<double>(prefix_len) + 1.0 / (B * B));
}

BridgeStats bridge_round(ChainState& state, const PosteriorSpec& spec_t, const LadderSchedule& ladder) {
    BridgeStats stats;
    PosteriorSpec rung = spec_t;
    for (int j = 1; j <= ladder.K; ++j) {
        rung.temper = std::min(1.0, j * ladder.delta);
        const Target target = make_target(rung);
        for (int s = 0; s < ladder.steps_per_rung; ++s) {
            stats.accepted += mala_step(target, state) ? 1 : 0;
            stats.transitions += 1;
        }
    }
    return stats;
}

AdaptResult adapt_step_size_target(const Target& target, ChainState& state, const AdaptOptions& opts) {
    if (!(opts.target_lo > 0.0 && opts.target_lo < opts.target_hi && opts.target_hi < 1.0))
        throw std::invalid_argument("adapt_step_size: need 0 < target_lo < target_hi < 1");
    AdaptResult res;
    for (int b = 0; b < opts.max_batches; ++b) {
        int acc = 0;
        for (int i = 0; i < opts.pilot; ++i) acc += mala_step(target, state) ? 1 : 0;
        const double rate = static_cast<double>(acc) / opts.pilot;
        res.acceptance = rate;
        res.batches = b + 1;
        if (rate > opts.target_hi) {
            state.h *= opts.grow;
        } else if (rate < opts.target_lo) {
            state.h *= opts.shrink;
        } else {
            res.reached_window = true;
            break;
        }
    }
    res.h = state.h;
    return res;
}

AdaptResult adapt_step_size(const PosteriorSpec& spec, ChainState& state, double R, const AdaptOptions& opts) {
    state.h = initial_step_size(spec.prefix_len, R, spec.B);
    return adapt_step_size_target(make_target(spec), state, opts);
}

std::vector<Vec> draw_iid_samples(std::vector<ChainState>& prev_states, const PosteriorSpec& spec_t,
                                  const LadderSchedule& ladder, std::size_t s_t, DrawStats* stats) {
    if (prev_states.size() != s_t) throw std::invalid_argument("draw_iid_samples: need s_t previous states");
    std::vector<Vec> samples(s_t);
    std::vector<BridgeStats> per_chain(s_t);
    parallel_for(s_t, [&](std::size_t i) {
        per_chain[i] = bridge_round(prev_states[i], spec_t, ladder);
        samples[i] = prev_states[i].theta;
    });
    if (stats) {
        for (std::size_t i = 0; i < s_t; ++i) {
            stats->transitions += per_chain[i].transitions;
            stats->accepted += per_chain[i].accepted;
            stats->proposed += per_chain[i].transitions;
        }
    }
    return samples;
}

PracticalSampler::PracticalSampler(std::size_t dim, double B, std::uint64_t seed, PracticalOptions opts)
    : opts_(opts), B_(B) {
    SplitMix64 master(seed);
    SplitMix64 init_rng = master.split();
    Vec theta0(dim);
    for (double& v : theta0) v = B * init_rng.next_gaussian();
    chain_ = ChainState::init(std::move(theta0), 1.0, master.next_u64());
}

std::vector<Vec> PracticalSampler::round(const PosteriorSpec& spec_t, double R, PracticalRoundStats* stats) {
    const std::uint64_t t0 = chain_.proposed;
    const AdaptResult adapt = adapt_step_size(spec_t, chain_, R, opts_.adapt);

    // Burn-in toward the round-t target. With the ladder enabled the flat
    // burn-in is replaced by a tempered one: the burn-in budget is spread
    // across the K rungs (at least one step each).
    if (opts_.use_ladder && spec_t.prefix_len > 0) {
        LadderSchedule ladder = build_ladder(std::max(R, 1e-12), spec_t.B, 1.0 /*budget unused here*/, opts_.c_delta);
        ladder.steps_per_rung = std::max(1, (opts_.burn_in + ladder.K - 1) / ladder.K);
        bridge_round(chain_, spec_t, ladder);
    } else {
        const Target target = make_target(spec_t);
        for (int i = 0; i < opts_.burn_in; ++i) mala_step(target, chain_);
    }

    const Target target = make_target(spec_t);
    std::vector<Vec> samples;
    samples.reserve(opts_.S);
    std::uint64_t acc0 = chain_.accepted, prop0 = chain_.proposed;
    for (int k = 0; k < opts_.S; ++k) {
        for (int s = 0; s < opts_.thin; ++s) mala_step(target, chain_);
        samples.push_back(chain_.theta);
    }
    if (stats) {
        stats->transitions = chain_.proposed - t0;
        const std::uint64_t props = chain_.proposed - prop0;
        stats->acceptance = props ? static_cast<double>(chain_.accepted - acc0) / props : 0.0;
        stats->h = chain_.h;
        stats->adapt_warning = !adapt.reached_window;
    }
    return samples;
}

}  // namespace ewlogit
