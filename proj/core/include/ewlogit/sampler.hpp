#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ewlogit/posterior.hpp"
#include "ewlogit/rng.hpp"
#include "ewlogit/vec.hpp"

namespace ewlogit {

// Generic MALA target: negative log density up to a constant, with gradient.
// PosteriorSpec is the production target; tests also drive synthetic ones.
struct Target {
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> grad;
    std::size_t dim = 1;
};

Target make_target(const PosteriorSpec& spec);

struct ChainState {
    Vec theta;
    double h = 1.0;  // step size
    std::uint64_t accepted = 0;
    std::uint64_t proposed = 0;
    std::uint64_t seed = 0;
    SplitMix64 rng;

    static ChainState init(Vec theta0, double h0, std::uint64_t seed) {
        ChainState s;
        s.theta = std::move(theta0);
        s.h = h0;
        s.seed = seed;
        s.rng = SplitMix64(seed);
        return s;
    }
};

// One Metropolis-adjusted Langevin transition:
//   propose theta' = theta - h grad V(theta) + sqrt(2h) xi,
// accept with probability min(1, exp(-V' + V + log q(theta|theta') - log q(theta'|theta))).
// Returns whether the proposal was accepted. Deterministic given the chain's
// rng stream.
bool mala_step(const Target& target, ChainState& state);
bool mala_step(const PosteriorSpec& spec, ChainState& state);

// Power-tempered bridge schedule between consecutive posteriors.
// delta = c_delta/(R B) capped at 1, K = ceil(1/delta), uniform budget split.
struct LadderSchedule {
    double delta = 1.0;
    int K = 1;
    double rung_budget = 0.0;   // eps_fresh / K
    int steps_per_rung = 0;     // N_rung
};

LadderSchedule build_ladder(double R, double B, double eps_fresh, double c_delta);

// N_rung = ceil(C sqrt(d) kappa max(1, log(K/eps))), the warm-start MALA
// step-count schedule; monotone in kappa and 1/eps, floored at one step.
int step_count_for_accuracy(double kappa, int d, double eps, int K, double C = 1.0);

// Appendix-D initialization h_t = (1e-3 + R^2 (t-1)/4 + 1/B^2)^{-1},
// with prefix_len = t-1.
double initial_step_size(std::size_t prefix_len, double R, double B);

struct BridgeStats {
    std::uint64_t transitions = 0;  // Q contribution: K * N_rung
    std::uint64_t accepted = 0;
};

// Runs N_rung MALA steps at each rung v_j = min(1, j*delta), j = 1..K, with
// the temper applied to the newest prefix example of spec_t (temper must be 1
// on entry; rung j replaces it by v_j). The chain must enter approximately
// distributed as the previous round's posterior.
BridgeStats bridge_round(ChainState& state, const PosteriorSpec& spec_t, const LadderSchedule& ladder);

struct AdaptOptions {
    double target_lo = 0.55;
    double target_hi = 0.80;
    int pilot = 5;        // proposals per pilot batch
    int max_batches = 50;
    double grow = 1.5;    // h multiplier when acceptance is above target_hi
    double shrink = 0.6;  // h multiplier when acceptance is below target_lo
};

struct AdaptResult {
    double h = 0.0;
    double acceptance = 0.0;  // last batch acceptance rate
    int batches = 0;
    bool reached_window = false;
};

// Initializes state.h by the formula above, then adapts it multiplicatively
// on short pilot batches until the batch acceptance rate lands in
// [target_lo, target_hi] (or the batch cap is hit; reached_window reports it).
AdaptResult adapt_step_size(const PosteriorSpec& spec, ChainState& state, double R,
                            const AdaptOptions& opts = {});
AdaptResult adapt_step_size_target(const Target& target, ChainState& state, const AdaptOptions& opts = {});

// Fresh/inherited total-variation budget bookkeeping:
// err_t <= err_{t-1} + eps_t, so the reported cumulative budget after n
// rounds is exactly the sum of the fresh budgets.
struct RoundBudget {
    double eps_fresh = 0.0;
    double err_inherited = 0.0;

    double err_after() const { return err_inherited + eps_fresh; }
};

struct TvBudgetLedger {
    double cumulative = 0.0;
    std::uint64_t transitions = 0;  // running Q total

    RoundBudget begin_round(double eps_fresh) const { return RoundBudget{eps_fresh, cumulative}; }
    void commit(const RoundBudget& rb, std::uint64_t q) {
        cumulative = rb.err_after();
        transitions += q;
    }
};

// Theory mode: s_t independent copies of the bridged warm-start construction,
// each initialized from its own previous-round state. Advances every chain
// through the round-t bridge and returns the s_t parameter vectors.
struct DrawStats {
    std::uint64_t transitions = 0;
    std::uint64_t accepted = 0;
    std::uint64_t proposed = 0;
};

std::vector<Vec> draw_iid_samples(std::vector<ChainState>& prev_states, const PosteriorSpec& spec_t,
                                  const LadderSchedule& ladder, std::size_t s_t, DrawStats* stats = nullptr);

// Practical mode (single adaptive chain, dependent samples; the i.i.d.
// contract of the theory mode is explicitly waived). Per round: re-init and
// pilot-adapt h, a tempered (or flat) burn-in, then retain S samples with
// thinning tau.
struct PracticalOptions {
    int S = 24;
    int burn_in = 10;
    int thin = 1;
    bool use_ladder = true;
    double c_delta = 0.5;
    AdaptOptions adapt{};
};

struct PracticalRoundStats {
    std::uint64_t transitions = 0;
    double acceptance = 0.0;  // over the retention phase
    double h = 0.0;
    bool adapt_warning = false;
};

class PracticalSampler {
  public:
    PracticalSampler(std::size_t dim, double B, std::uint64_t seed, PracticalOptions opts = {});

    // spec_t: the full round-t posterior (temper = 1). R: data radius so far.
    std::vector<Vec> round(const PosteriorSpec& spec_t, double R, PracticalRoundStats* stats = nullptr);

    const ChainState& chain() const { return chain_; }

  private:
    PracticalOptions opts_;
    ChainState chain_;
    double B_;
};

}  // namespace ewlogit
