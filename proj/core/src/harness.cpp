#include "ewlogit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ewlogit/geometry.hpp"
#include "ewlogit/parallel.hpp"
#include "ewlogit/quadrature.hpp"

namespace ewlogit {

const char* predictor_name(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::EwExact: return "ew-exact";
        case PredictorKind::EwTheory: return "ew-theory";
        case PredictorKind::EwPractical: return "ew-practical";
        case PredictorKind::SolidAngle: return "solid-angle";
        case PredictorKind::Ogd: return "ogd";
        case PredictorKind::Ons: return "ons";
    }
    return "?";
}

std::optional<PredictorKind> predictor_from_name(const std::string& name) {
    for (PredictorKind k : {PredictorKind::EwExact, PredictorKind::EwTheory, PredictorKind::EwPractical,
                            PredictorKind::SolidAngle, PredictorKind::Ogd, PredictorKind::Ons})
        if (name == predictor_name(k)) return k;
    return std::nullopt;
}

namespace {

void push_round(RunResult& res, int t, double loss, double acceptance, double h, std::uint64_t q) {
    RoundLog log;
    log.t = t;
    log.loss = loss;
    log.cum_loss = (res.rounds.empty() ? 0.0 : res.rounds.back().cum_loss) + loss;
    log.avg_loss = log.cum_loss / t;
    log.acceptance = acceptance;
    log.h = h;
    log.q = q;
    res.rounds.push_back(log);
    res.total_loss = log.cum_loss;
    res.total_transitions += q;
}

struct OnlineCtx {
    const Dataset& data;
    const RunConfig& cfg;
    std::size_t T;
    std::size_t n_sched;
    std::size_t d;
    std::shared_ptr<const PosteriorData> pdata;
};

void run_ew_exact(const OnlineCtx& ctx, RunResult& res) {
    Vec mode_hint;
    const double tol = ctx.cfg.overrides.exact_tol.value_or(1e-8);
    for (std::size_t t = 1; t <= ctx.T; ++t) {
        const LabeledExample& e = ctx.data.examples[t - 1];
        PosteriorSpec spec = make_posterior(ctx.pdata, t - 1, ctx.cfg.B);
        ExactOptions opts;
        opts.rel_tol = tol;
        if (!mode_hint.empty()) opts.mode_hint = &mode_hint;
        const Prediction pred = ew_predict_exact(spec, e.x, opts);
        push_round(res, static_cast<int>(t), -std::log(pred.prob_of(e.y)), 0.0, 0.0, 0);
        if (t < ctx.T) mode_hint = potential_mode(make_posterior(ctx.pdata, t, ctx.cfg.B), nullptr);
    }
}

void run_ew_theory(const OnlineCtx& ctx, RunResult& res) {
    const auto& ov = ctx.cfg.overrides;
    const Schedule sched = corollary_schedule(static_cast<int>(ctx.n_sched), ctx.cfg.delta);
    const double alpha = ov.alpha.value_or(sched.alpha_t);
    const double eps = ov.eps.value_or(sched.eps_t);
    const std::size_t s = static_cast<std::size_t>(ov.s.value_or(sched.s_t));
    const double c_delta = ov.c_delta.value_or(0.5);
    const double step_c = ov.step_const.value_or(1.0);

    SplitMix64 master(ctx.cfg.seed);
    SplitMix64 chain_master = master.split();
    std::vector<ChainState> chains;
    chains.reserve(s);
    std::vector<Vec> samples(s, Vec(ctx.d, 0.0));
    for (std::size_t i = 0; i < s; ++i) {
        SplitMix64 rng = chain_master.split();
        Vec theta0(ctx.d);
        for (double& v : theta0) v = ctx.cfg.B * rng.next_gaussian();
        samples[i] = theta0;
        ChainState st = ChainState::init(std::move(theta0), 1.0, rng.next_u64());
        chains.push_back(std::move(st));
    }

    TvBudgetLedger ledger;
    double R_prefix = 0.0;

    for (std::size_t t = 1; t <= ctx.T; ++t) {
        std::uint64_t q_round = 0, acc_round = 0;
        double h_log = 0.0;
        if (t > 1) {
            const PosteriorSpec spec_t = make_posterior(ctx.pdata, t - 1, ctx.cfg.B);
            const double R_eff = std::max(R_prefix, 1e-12);
            LadderSchedule ladder = build_ladder(R_eff, ctx.cfg.B, eps, c_delta);
            const double kappa = constants(spec_t, R_eff).kappa;
            ladder.steps_per_rung =
                step_count_for_accuracy(kappa, static_cast<int>(ctx.d), eps, ladder.K, step_c);

            std::vector<BridgeStats> stats(s);
            const bool fixed_h = ov.use_asymptotic_h;
            const double h_asym = 1.0 / (constants(spec_t, R_eff).L * std::sqrt(static_cast<double>(ctx.d)));
            AdaptOptions aopts;
            aopts.target_lo = ov.accept_lo.value_or(aopts.target_lo);
            aopts.target_hi = ov.accept_hi.value_or(aopts.target_hi);
            parallel_for(s, [&](std::size_t i) {
                if (fixed_h) {
                    chains[i].h = h_asym;
                } else {
                    adapt_step_size(spec_t, chains[i], R_eff, aopts);
                }
                stats[i] = bridge_round(chains[i], spec_t, ladder);
                samples[i] = chains[i].theta;
            });
            for (const auto& st : stats) {
                q_round += st.transitions;
                acc_round += st.accepted;
            }
            RoundBudget rb = ledger.begin_round(eps);
            ledger.commit(rb, q_round);
            h_log = chains.front().h;
        }
        const LabeledExample& e = ctx.data.examples[t - 1];
        const Prediction pred = ew_predict_mc(samples, e.x, alpha);
        const double acc_rate = q_round ? static_cast<double>(acc_round) / q_round : 0.0;
        push_round(res, static_cast<int>(t), -std::log(pred.prob_of(e.y)), acc_rate, h_log, q_round);
        R_prefix = std::max(R_prefix, norm2(e.x));
    }
    res.cumulative_tv_budget = ledger.cumulative;
}

void run_ew_practical(const OnlineCtx& ctx, RunResult& res) {
    const auto& ov = ctx.cfg.overrides;
    PracticalOptions popts;
    popts.S = ov.S.value_or(popts.S);
    popts.burn_in = ov.burn_in.value_or(popts.burn_in);
    popts.thin = ov.thin.value_or(popts.thin);
    popts.use_ladder = ov.use_ladder.value_or(popts.use_ladder);
    popts.c_delta = ov.c_delta.value_or(popts.c_delta);
    popts.adapt.target_lo = ov.accept_lo.value_or(popts.adapt.target_lo);
    popts.adapt.target_hi = ov.accept_hi.value_or(popts.adapt.target_hi);
    const double alpha = ov.alpha.value_or(0.0);

    PracticalSampler sampler(ctx.d, ctx.cfg.B, ctx.cfg.seed, popts);
    double R_prefix = 0.0;
    for (std::size_t t = 1; t <= ctx.T; ++t) {
        const LabeledExample& e = ctx.data.examples[t - 1];
        PracticalRoundStats stats;
        const PosteriorSpec spec_t = make_posterior(ctx.pdata, t - 1, ctx.cfg.B);
        const auto samples = sampler.round(spec_t, std::max(R_prefix, 1e-12), &stats);
        Prediction pred = ew_predict_mc(samples, e.x, alpha);
        pred.mode = PredictorMode::McPractical;
        push_round(res, static_cast<int>(t), -std::log(pred.prob_of(e.y)), stats.acceptance, stats.h,
                   stats.transitions);
        R_prefix = std::max(R_prefix, norm2(e.x));
    }
}

void run_solid_angle(const OnlineCtx& ctx, RunResult& res) {
    const long mc = ctx.cfg.overrides.voter_mc.value_or(100000);
    SplitMix64 master(ctx.cfg.seed);
    ConeSlice cone;
    cone.gamma = 0.0;
    for (std::size_t t = 1; t <= ctx.T; ++t) {
        const LabeledExample& e = ctx.data.examples[t - 1];
        SolidAngleOptions opts;
        opts.seed = master.next_u64();
        const Prediction pred = solid_angle_predict(cone, e.x, mc, opts);
        push_round(res, static_cast<int>(t), -std::log(pred.prob_of(e.y)), 0.0, 0.0, 0);
        cone.add(e);
    }
}

void run_baseline(const OnlineCtx& ctx, RunResult& res) {
    const bool ons = ctx.cfg.predictor == PredictorKind::Ons;
    double R_run = 0.0;
    OgdState ogd = OgdState::init(ctx.d, ctx.cfg.B, 1.0);
    OnsState ons_state = OnsState::init(ctx.d, ctx.cfg.B, 1.0);
    for (std::size_t t = 1; t <= ctx.T; ++t) {
        const LabeledExample& e = ctx.data.examples[t - 1];
        R_run = std::max({R_run, norm2(e.x), 1e-12});
        Prediction pred;
        if (ons) {
            ons_state.R = R_run;
            ons_state.gamma_ons = 0.5 * std::min(1.0 / (4.0 * R_run * ctx.cfg.B), 1.0);
            pred = ons_predict_update(ons_state, e);
        } else {
            ogd.R = R_run;
            pred = ogd_predict_update(ogd, e);
        }
        push_round(res, static_cast<int>(t), -std::log(pred.prob_of(e.y)), 0.0, 0.0, 0);
    }
}

}  // namespace

RunResult run_online(const Dataset& data, const RunConfig& cfg) {
    RunResult res;
    const std::size_t T = std::min(cfg.n ? cfg.n : data.size(), data.size());
    if (T == 0) return res;
    OnlineCtx ctx{data, cfg, T, cfg.n ? cfg.n : data.size(), std::max<std::size_t>(1, data.d), nullptr};
    ctx.pdata = PosteriorData::make({data.examples.data(), T});
    try {
        switch (cfg.predictor) {
            case PredictorKind::EwExact: run_ew_exact(ctx, res); break;
            case PredictorKind::EwTheory: run_ew_theory(ctx, res); break;
            case PredictorKind::EwPractical: run_ew_practical(ctx, res); break;
            case PredictorKind::SolidAngle: run_solid_angle(ctx, res); break;
            case PredictorKind::Ogd:
            case PredictorKind::Ons: run_baseline(ctx, res); break;
        }
    } catch (const std::exception& ex) {
        throw std::runtime_error("run_online: predictor failed at round " +
                                 std::to_string(res.rounds.size() + 1) + ": " + ex.what());
    }
    return res;
}

namespace {

double objective(const Dataset& data, std::span<const double> theta) {
    double f = 0.0;
    for (const auto& e : data.examples) f += logistic_loss(e.y * dot(e.x, theta));
    return f;
}

void objective_grad(const Dataset& data, std::span<const double> theta, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& e : data.examples) {
        const double c = loss_grad_scalar(e.y * dot(e.x, theta)) * e.y;
        axpy(c, e.x, g);
    }
}

void project_ball(Vec& v, double B) {
    const double n = norm2(v);
    if (n > B) scale(B / n, v);
}

struct FistaOut {
    Vec theta;
    double value = 0.0;
    bool converged = false;
    long iters = 0;
};

// FISTA with backtracking and function-value restarts on the B-ball.
FistaOut fista(const Dataset& data, double B, Vec init, const ComparatorOptions& opts) {
    const std::size_t d = init.size();
    project_ball(init, B);
    Vec x = init, y = init, x_prev = init, g(d), cand(d);
    double L = 1e-2;
    for (const auto& e : data.examples) L += 0.25 * sqnorm(e.x);
    L = std::max(L / 16.0, 1e-6);  // optimistic start; backtracking restores validity
    double fx = objective(data, x);
    double tk = 1.0;
    FistaOut out;
    for (long it = 0; it < opts.max_iter; ++it) {
        objective_grad(data, y, g);
        const double fy = objective(data, y);
        // backtracking on the projected step from y
        for (;;) {
            cand = y;
            axpy(-1.0 / L, g, cand);
            project_ball(cand, B);
            double quad = fy;
            double diff2 = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double di = cand[i] - y[i];
                quad += g[i] * di;
                diff2 += di * di;
            }
            quad += 0.5 * L * diff2;
            if (objective(data, cand) <= quad + 1e-12 * std::abs(quad)) break;
            L *= 2.0;
            if (L > 1e18) break;
        }
        const double fc = objective(data, cand);
        if (fc > fx) {  // restart momentum at the best point
            y = x;
            tk = 1.0;
            objective_grad(data, x, g);
            cand = x;
            axpy(-1.0 / L, g, cand);
            project_ball(cand, B);
        }
        x_prev = x;
        x = cand;
        fx = objective(data, x);

        // gradient-map norm at x with unit reference step
        objective_grad(data, x, g);
        Vec step = x;
        axpy(-1.0 / L, g, step);
        project_ball(step, B);
        double gm = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double di = (x[i] - step[i]) * L;
            gm += di * di;
        }
        out.iters = it + 1;
        if (std::sqrt(gm) <= opts.grad_map_tol) {
            out.converged = true;
            break;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        y = x;
        const double mom = (tk - 1.0) / tn;
        for (std::size_t i = 0; i < d; ++i) y[i] += mom * (x[i] - x_prev[i]);
        project_ball(y, B);
        tk = tn;
    }
    out.theta = x;
    out.value = fx;
    return out;
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t dataset_hash(const Dataset& data, double B) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a(&B, sizeof(B), h);
    const std::uint64_t n = data.size();
    h = fnv1a(&n, sizeof(n), h);
    for (const auto& e : data.examples) {
        h = fnv1a(&e.y, sizeof(e.y), h);
        h = fnv1a(e.x.data(), e.x.size() * sizeof(double), h);
    }
    return h;
}

}  // namespace

RegretReport comparator_loss(const Dataset& data, double B, const ComparatorOptions& opts) {
    if (!(B > 0.0)) throw std::invalid_argument("comparator_loss: B must be > 0");
    RegretReport rep;
    const std::size_t d = std::max<std::size_t>(1, data.d);
    if (data.examples.empty()) {
        rep.comparator_loss = 0.0;
        rep.comparator_theta.assign(d, 0.0);
        rep.converged = true;
        return rep;
    }

    std::filesystem::path cache_file;
    if (!opts.cache_dir.empty()) {
        std::filesystem::create_directories(opts.cache_dir);
        char name[64];
        std::snprintf(name, sizeof(name), "comparator_%016llx.json",
                      static_cast<unsigned long long>(dataset_hash(data, B)));
        cache_file = std::filesystem::path(opts.cache_dir) / name;
        std::ifstream in(cache_file);
        if (in) {
            const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
            if (!j.is_discarded()) {
                rep.comparator_loss = j.at("value").get<double>();
                rep.comparator_theta = j.at("theta").get<Vec>();
                rep.converged = j.at("converged").get<bool>();
                rep.iterations = j.at("iterations").get<long>();
                return rep;
            }
        }
    }

    // second restart point: the OGD final iterate
    OgdState ogd = OgdState::init(d, B, std::max(data.R, 1e-12));
    for (const auto& e : data.examples) ogd_predict_update(ogd, e);

    FistaOut best = fista(data, B, Vec(d, 0.0), opts);
    FistaOut alt = fista(data, B, ogd.theta, opts);
    if (alt.value < best.value) best = std::move(alt);

    rep.comparator_loss = best.value;
    rep.comparator_theta = best.theta;
    rep.converged = best.converged;
    rep.iterations = best.iters;

    if (!cache_file.empty()) {
        nlohmann::json j;
        j["value"] = rep.comparator_loss;
        j["theta"] = rep.comparator_theta;
        j["converged"] = rep.converged;
        j["iterations"] = rep.iterations;
        std::ofstream out(cache_file);
        out << j.dump(2) << '\n';
    }
    return rep;
}

namespace {

double quantile_type7(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return 0.0;
    const double h = (v.size() - 1) * p;
    const std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - i) * (v[i + 1] - v[i]);
}

}  // namespace

std::vector<SweepPoint> sweep_B(const Dataset& data, const RunConfig& base, std::span<const double> grid,
                                int repeats) {
    if (grid.empty()) throw std::invalid_argument("sweep_B: empty grid");
    std::vector<SweepPoint> out(grid.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        out[gi].B = grid[gi];
        out[gi].values.assign(repeats, 0.0);
    }
    const std::size_t total = grid.size() * repeats;
    parallel_for(total, [&](std::size_t k) {
        const std::size_t gi = k / repeats;
        const int rep = static_cast<int>(k % repeats);
        // permutations are paired across B values
        const std::uint64_t perm_seed = base.seed * 0x9e3779b97f4a7c15ull + 1 + rep;
        const Dataset shuffled = permute(data, perm_seed);
        RunConfig cfg = base;
        cfg.B = grid[gi];
        cfg.seed = perm_seed ^ 0x5851f42d4c957f2dull;
        const RunResult res = run_online(shuffled, cfg);
        out[gi].values[rep] = res.rounds.empty() ? 0.0 : res.rounds.back().avg_loss;
    });
    for (auto& pt : out) {
        pt.median = quantile_type7(pt.values, 0.5);
        pt.q25 = quantile_type7(pt.values, 0.25);
        pt.q75 = quantile_type7(pt.values, 0.75);
    }
    return out;
}

double worst_of_chi_mean_regret(PredictorKind kind, int n, int n_seeds, std::uint64_t seed0,
                                const ScheduleOverrides& overrides) {
    const double B = std::log(static_cast<double>(n));
    double worst = -std::numeric_limits<double>::infinity();
    for (int chi : {+1, -1}) {
        std::vector<double> regrets(n_seeds, 0.0);
        parallel_for(static_cast<std::size_t>(n_seeds), [&](std::size_t s) {
            HazanConfig hc;
            hc.n = n;
            hc.B = B;
            hc.eps = 0.01;
            hc.chi = chi;
            hc.seed = seed0 + 1000003ull * s + (chi > 0 ? 0u : 500009u);
            const Dataset data = gen_hazan(hc);
            RunConfig cfg;
            cfg.predictor = kind;
            cfg.B = B;
            cfg.n = static_cast<std::size_t>(n);
            cfg.seed = hc.seed ^ 0xa5a5a5a5a5a5a5a5ull;
            cfg.overrides = overrides;
            const RunResult res = run_online(data, cfg);
            const RegretReport cmp = comparator_loss(data, B);
            regrets[s] = res.total_loss - cmp.comparator_loss;
        });
        double mean = 0.0;
        for (double r : regrets) mean += r;
        mean /= n_seeds;
        worst = std::max(worst, mean);
    }
    return worst;
}

namespace {

VerifyCheck check_smoothing(std::uint64_t seed) {
    VerifyCheck c{"smoothing_additive_bound", true, std::numeric_limits<double>::infinity(), ""};
    SplitMix64 rng(seed);
    for (int i = 0; i < 2000; ++i) {
        const double p = rng.next_double_open();
        const double a = 0.5 * rng.next_double();
        const double slack = 2.0 * a - (-std::log(smooth(p, a)) + std::log(p));
        c.margin = std::min(c.margin, slack);
    }
    // run-based form: identical sampler stream, smoothed vs raw predictions
    HazanConfig hc;
    hc.n = 12;
    hc.seed = seed + 5;
    const Dataset data = gen_hazan(hc);
    RunConfig cfg;
    cfg.predictor = PredictorKind::EwPractical;
    cfg.B = hc.B > 0 ? hc.B : std::log(12.0);
    cfg.seed = seed + 6;
    RunConfig cfg_sm = cfg;
    cfg_sm.overrides.alpha = 0.05;
    const double raw = run_online(data, cfg).total_loss;
    const double smoothed = run_online(data, cfg_sm).total_loss;
    const double budget = 2.0 * 0.05 * data.size();
    c.margin = std::min(c.margin, budget - (smoothed - raw));
    c.pass = c.margin >= -1e-12;
    c.detail = "worst slack of -log smooth(p) <= -log p + 2 alpha";
    return c;
}

VerifyCheck check_tv_shift(std::uint64_t seed) {
    VerifyCheck c{"tv_shift_bound", true, std::numeric_limits<double>::infinity(), ""};
    SplitMix64 rng(seed);
    for (int i = 0; i < 2000; ++i) {
        const double a = 0.01 + 0.49 * rng.next_double();
        const double e = 0.25 * a * rng.next_double();
        const double p_hat = 0.5 * a + (1.0 - 0.5 * a) * rng.next_double();
        const double p_tld = std::max(0.5 * a, p_hat - e);
        const double slack = 2.0 * e / a - std::log(p_hat / p_tld);
        c.margin = std::min(c.margin, slack);
    }
    c.pass = c.margin >= -1e-12;
    c.detail = "log(p_hat/p_tilde) <= 2E/alpha when |p_hat-p_tilde| <= E, p_tilde >= alpha/2";
    return c;
}

VerifyCheck check_chernoff_schedule(std::uint64_t) {
    VerifyCheck c{"chernoff_schedule_hypothesis", true, std::numeric_limits<double>::infinity(), ""};
    for (int n : {1, 2, 5, 10, 50, 100})
        for (double delta : {0.5, 0.1, 0.01}) {
            const Schedule s = corollary_schedule(n, delta);
            c.margin = std::min(c.margin, s.alpha_t * s.s_t - 16.0 * std::log(1.0 / s.delta_t));
        }
    c.pass = c.margin >= 0.0;
    c.detail = "alpha_t s_t >= 16 log(1/delta_t) for the Corollary schedule";
    return c;
}

VerifyCheck check_renyi_rung(std::uint64_t) {
    VerifyCheck c{"renyi_rung_bound_d1", true, std::numeric_limits<double>::infinity(), ""};
    const double B = 1.0, R = 1.0;
    std::vector<LabeledExample> ex{{Vec{R}, +1}};
    auto data = PosteriorData::make(ex);
    const PosteriorSpec spec = make_posterior(data, 1, B);
    if (renyi2_between_rungs(spec, 0.3, 0.0) != 0.0) {
        c.pass = false;
        c.margin = -1.0;
        c.detail = "dv=0 must give exactly 0";
        return c;
    }
    for (double v : {0.0, 0.45, 0.85})
        for (double dv : {0.05, 0.1}) {
            const double d2 = renyi2_between_rungs(spec, v, dv);
            c.margin = std::min(c.margin, dv * dv * R * R * B * B - d2);
        }
    c.pass = c.margin >= 0.0;
    c.detail = "quadrature D2(rho_v || rho_{v+dv}) <= dv^2 R^2 B^2";
    return c;
}

VerifyCheck check_sigmoid_tail(std::uint64_t) {
    VerifyCheck c{"sigmoid_tail_bound", true, std::numeric_limits<double>::infinity(), ""};
    for (double z = 0.0; z <= 40.0; z += 0.125)
        c.margin = std::min(c.margin, sigmoid(z) - (1.0 - std::exp(-z)));
    c.pass = c.margin >= -1e-15;  // one ulp at 1.0, where both sides saturate
    c.detail = "sigma(z) >= 1 - exp(-z) on z in [0, 40] (1-ulp tolerance)";
    return c;
}

VerifyCheck check_cap_probability(std::uint64_t seed) {
    VerifyCheck c{"cap_probability_bound", true, std::numeric_limits<double>::infinity(), ""};
    for (int d : {2, 3, 5, 8})
        for (double t : {0.0, 0.3, 0.5, 0.9}) {
            const CapCheck cap = cap_probability_check(d, t, 200000, seed + d * 31 + int(t * 100));
            c.margin = std::min(c.margin, cap.empirical - (cap.lower_bound - 3.0 * cap.std_error));
        }
    c.pass = c.margin >= 0.0;
    c.detail = "empirical cap mass >= c_d (1-t^2)^{(d-1)/2} - 3 MC stderr";
    return c;
}

VerifyCheck check_alpha_t1(std::uint64_t seed) {
    VerifyCheck c{"alpha_t1_lower_bound", true, std::numeric_limits<double>::infinity(), ""};
    SplitMix64 rng(seed);
    const double denom = 2.0 * (2.0 + std::sqrt(2.0));
    for (int inst = 0; inst < 100; ++inst) {
        const int d = 2 + static_cast<int>(rng.next_double() * 4);
        Vec u = sample_unit_sphere(d, rng);
        std::vector<LabeledExample> data;
        const int m = 3 + static_cast<int>(rng.next_double() * 6);
        for (int i = 0; i < m; ++i) {
            const double margin = 0.05 + 0.95 * rng.next_double();
            Vec x = sample_unit_sphere(d, rng);
            const double along = dot(x, u);
            axpy(margin - along, u, x);  // force <u, x> = margin, |x| bounded
            const int y = rng.next_double() < 0.5 ? +1 : -1;
            if (y < 0) scale(-1.0, x);
            data.push_back({std::move(x), y});
        }
        const MarginReport rep = margin_report(data, u, m);
        if (!rep.separable) continue;
        c.margin = std::min(c.margin, rep.alpha_t1 - rep.gamma / denom);
    }
    c.pass = c.margin >= -1e-12;
    c.detail = "alpha(t1) >= gamma / (2(2+sqrt 2)) on random separable instances";
    return c;
}

VerifyCheck check_chi_square_median(std::uint64_t seed) {
    VerifyCheck c{"chi_square_median", true, std::numeric_limits<double>::infinity(), ""};
    SplitMix64 rng(seed);
    for (int d = 2; d <= 10; ++d) {
        long hits = 0;
        const long trials = 100000;
        for (long i = 0; i < trials; ++i) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                const double g = rng.next_gaussian();
                s += g * g;
            }
            if (s >= d - 1.0) ++hits;
        }
        c.margin = std::min(c.margin, static_cast<double>(hits) / trials - 0.5);
    }
    c.pass = c.margin >= 0.0;
    c.detail = "empirical P(chi^2_d >= d-1) >= 1/2 for d in 2..10";
    return c;
}

}  // namespace

VerifyReport verify_lemmas(std::uint64_t seed) {
    VerifyReport rep;
    rep.checks.push_back(check_smoothing(seed));
    rep.checks.push_back(check_tv_shift(seed + 1));
    rep.checks.push_back(check_chernoff_schedule(seed + 2));
    rep.checks.push_back(check_renyi_rung(seed + 3));
    rep.checks.push_back(check_sigmoid_tail(seed + 4));
    rep.checks.push_back(check_cap_probability(seed + 5));
    rep.checks.push_back(check_alpha_t1(seed + 6));
    rep.checks.push_back(check_chi_square_median(seed + 7));
    return rep;
}

std::string verify_report_json(const VerifyReport& report) {
    nlohmann::json j;
    j["all_pass"] = report.all_pass();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : report.checks) {
        j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}, {"detail", c.detail}});
    }
    return j.dump(2);
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_rounds_csv(const std::vector<RoundLog>& rounds, std::ostream& out) {
    out << "t,loss,cum_loss,avg_loss,acceptance,h,q\n";
    for (const auto& r : rounds) {
        out << r.t << ',' << fmt_double(r.loss) << ',' << fmt_double(r.cum_loss) << ','
            << fmt_double(r.avg_loss) << ',' << fmt_double(r.acceptance) << ',' << fmt_double(r.h) << ','
            << r.q << '\n';
    }
}

std::vector<RoundLog> read_rounds_csv(std::istream& in) {
    std::vector<RoundLog> rounds;
    std::string line;
    if (!std::getline(in, line) || line != "t,loss,cum_loss,avg_loss,acceptance,h,q")
        throw ParseError("rounds csv: bad header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        RoundLog r;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        unsigned long long q = 0;
        if (!(ls >> r.t >> r.loss >> r.cum_loss >> r.avg_loss >> r.acceptance >> r.h >> q))
            throw ParseError("rounds csv: bad row '" + line + "'");
        r.q = q;
        rounds.push_back(r);
    }
    return rounds;
}

void write_sweep_csv(const std::vector<SweepPoint>& sweep, std::ostream& out) {
    const std::size_t reps = sweep.empty() ? 0 : sweep.front().values.size();
    out << "B,median,q25,q75";
    for (std::size_t r = 0; r < reps; ++r) out << ",v" << r;
    out << '\n';
    for (const auto& pt : sweep) {
        out << fmt_double(pt.B) << ',' << fmt_double(pt.median) << ',' << fmt_double(pt.q25) << ','
            << fmt_double(pt.q75);
        for (double v : pt.values) out << ',' << fmt_double(v);
        out << '\n';
    }
}

std::string svg_line_plot(std::span<const double> xs, std::span<const double> ys, const std::string& title) {
    const int W = 640, H = 400, ML = 60, MR = 20, MT = 30, MB = 40;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (!xs.empty()) {
        xmin = *std::min_element(xs.begin(), xs.end());
        xmax = *std::max_element(xs.begin(), xs.end());
        ymin = *std::min_element(ys.begin(), ys.end());
        ymax = *std::max_element(ys.begin(), ys.end());
        if (xmax == xmin) xmax = xmin + 1;
        if (ymax == ymin) ymax = ymin + 1;
    }
    auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
    auto py = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };
    char buf[64];
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
    s << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\"" << H - MB
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
      << "\" stroke=\"black\"/>\n";
    s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6g,%.6g ", px(xs[i]), py(ys[i]));
        s << buf;
    }
    s << "\"/>\n";
    std::snprintf(buf, sizeof(buf), "%.6g", xmin);
    s << "<text x=\"" << ML << "\" y=\"" << H - MB + 16 << "\" font-size=\"11\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.6g", xmax);
    s << "<text x=\"" << W - MR << "\" y=\"" << H - MB + 16 << "\" text-anchor=\"end\" font-size=\"11\">"
      << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.6g", ymin);
    s << "<text x=\"" << ML - 5 << "\" y=\"" << H - MB << "\" text-anchor=\"end\" font-size=\"11\">" << buf
      << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.6g", ymax);
    s << "<text x=\"" << ML - 5 << "\" y=\"" << MT + 5 << "\" text-anchor=\"end\" font-size=\"11\">" << buf
      << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

void emit_outputs(const RunResult& result, const RunConfig& cfg, const std::string& out_dir,
                  const EmitOptions& opts) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    {
        std::ofstream out(dir / "rounds.csv", std::ios::binary);
        if (!out) throw std::runtime_error("emit_outputs: cannot write rounds.csv");
        write_rounds_csv(result.rounds, out);
    }
    {
        std::ofstream out(dir / "summary.csv", std::ios::binary);
        out << "n,total_loss,avg_loss,total_transitions,cumulative_tv_budget";
        if (opts.regret) out << ",comparator_loss,regret";
        out << '\n';
        const double avg = result.rounds.empty() ? 0.0 : result.rounds.back().avg_loss;
        out << result.rounds.size() << ',' << fmt_double(result.total_loss) << ',' << fmt_double(avg) << ','
            << result.total_transitions << ',' << fmt_double(result.cumulative_tv_budget);
        if (opts.regret)
            out << ',' << fmt_double(opts.regret->comparator_loss) << ','
                << fmt_double(result.total_loss - opts.regret->comparator_loss);
        out << '\n';
    }
    {
        std::ofstream out(dir / "config_resolved.txt", std::ios::binary);
        out << "predictor=" << predictor_name(cfg.predictor) << '\n';
        out << "B=" << fmt_double(cfg.B) << '\n';
        out << "n=" << cfg.n << '\n';
        out << "seed=" << cfg.seed << '\n';
        out << "delta=" << fmt_double(cfg.delta) << '\n';
        const auto& ov = cfg.overrides;
        auto put = [&out](const char* k, const auto& o) {
            if (o) out << k << '=' << *o << '\n';
        };
        put("alpha", ov.alpha);
        put("eps", ov.eps);
        put("s", ov.s);
        put("c_delta", ov.c_delta);
        put("step_const", ov.step_const);
        out << "use_asymptotic_h=" << (ov.use_asymptotic_h ? 1 : 0) << '\n';
        put("S", ov.S);
        put("burn_in", ov.burn_in);
        put("thin", ov.thin);
        if (ov.use_ladder) out << "use_ladder=" << (*ov.use_ladder ? 1 : 0) << '\n';
        put("voter_mc", ov.voter_mc);
        put("exact_tol", ov.exact_tol);
        put("accept_lo", ov.accept_lo);
        put("accept_hi", ov.accept_hi);
    }
    if (opts.svg) {
        std::vector<double> xs, ys;
        for (const auto& r : result.rounds) {
            xs.push_back(r.t);
            ys.push_back(r.avg_loss);
        }
        std::ofstream out(dir / "avg_loss.svg", std::ios::binary);
        out << svg_line_plot(xs, ys, "average log-loss");
    }
}

}  // namespace ewlogit
