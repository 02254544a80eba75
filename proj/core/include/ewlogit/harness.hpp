#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ewlogit/data_io.hpp"
#include "ewlogit/posterior.hpp"
#include "ewlogit/predictors.hpp"
#include "ewlogit/sampler.hpp"

namespace ewlogit {

enum class PredictorKind { EwExact, EwTheory, EwPractical, SolidAngle, Ogd, Ons };

const char* predictor_name(PredictorKind kind);
std::optional<PredictorKind> predictor_from_name(const std::string& name);

struct ScheduleOverrides {
    std::optional<double> alpha;       // smoothing per round
    std::optional<double> eps;         // fresh TV budget per round
    std::optional<long long> s;        // chain count (theory mode)
    std::optional<double> c_delta;     // ladder rung width constant
    std::optional<double> step_const;  // C in the N_rung schedule
    bool use_asymptotic_h = false;     // h = 1/(L sqrt(d)) instead of pilot adaptation
    std::optional<int> S;              // retained samples (practical mode)
    std::optional<int> burn_in;
    std::optional<int> thin;
    std::optional<bool> use_ladder;    // practical-mode tempered burn-in
    std::optional<long> voter_mc;      // solid-angle MC samples per prediction
    std::optional<double> exact_tol;   // quadrature tolerance (exact mode)
    std::optional<double> accept_lo;   // pilot-adaptation acceptance window
    std::optional<double> accept_hi;
};

struct RunConfig {
    PredictorKind predictor = PredictorKind::EwExact;
    double B = 1.0;
    std::size_t n = 0;  // rounds; 0 means the whole dataset. Runs min(n, data size)
                        // rounds while horizon-dependent schedules use n itself.
    std::uint64_t seed = 1;
    double delta = 0.05;  // total failure budget of the theory schedule
    ScheduleOverrides overrides;
};

struct RoundLog {
    int t = 0;
    double loss = 0.0;
    double cum_loss = 0.0;
    double avg_loss = 0.0;
    double acceptance = 0.0;
    double h = 0.0;
    std::uint64_t q = 0;  // sampler transitions attributed to the round
};

struct RunResult {
    std::vector<RoundLog> rounds;
    double total_loss = 0.0;
    std::uint64_t total_transitions = 0;
    double cumulative_tv_budget = 0.0;  // theory mode ledger
};

// Strict online protocol: the prediction for round t sees rounds < t plus the
// revealed x_t. Deterministic per seed; a predictor failure is rethrown with
// the round index.
RunResult run_online(const Dataset& data, const RunConfig& cfg);

struct RegretReport {
    double comparator_loss = 0.0;
    Vec comparator_theta;
    bool converged = false;
    long iterations = 0;
};

struct ComparatorOptions {
    double grad_map_tol = 1e-9;
    long max_iter = 100000;
    std::string cache_dir;  // empty disables the on-disk cache
};

// inf over |theta| <= B of the cumulative logistic loss (accelerated
// projected gradient with backtracking, restarted from 0 and from the OGD
// final iterate; the better optimum is kept).
RegretReport comparator_loss(const Dataset& data, double B, const ComparatorOptions& opts = {});

struct SweepPoint {
    double B = 0.0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    std::vector<double> values;  // final average loss per repeat
};

// For each B: repeats runs, each on a fresh random permutation of the data;
// aggregates the final average loss into median and interquartile range.
std::vector<SweepPoint> sweep_B(const Dataset& data, const RunConfig& base, std::span<const double> grid,
                                int repeats);

// Appendix-style adversarial aggregation: max over chi in {+1,-1} of the
// mean regret across seeds on the two-point process with B = log n.
double worst_of_chi_mean_regret(PredictorKind kind, int n, int n_seeds, std::uint64_t seed0,
                                const ScheduleOverrides& overrides = {});

struct VerifyCheck {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // worst slack observed (>= 0 means pass)
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

// Registered property checks over the appendix lemmas, at fixed seeds:
// smoothing additive bound, TV-shift bound, Chernoff schedule hypothesis,
// Renyi rung bound (d=1 quadrature), sigmoid tail bound, cap-probability
// lower bound, alpha(t1) lower bound, chi-square median fact.
VerifyReport verify_lemmas(std::uint64_t seed);
std::string verify_report_json(const VerifyReport& report);

// CSV and SVG emission. CSV: comma separated, header row, '.' decimal
// separator, LF newlines, round-trip exact doubles.
void write_rounds_csv(const std::vector<RoundLog>& rounds, std::ostream& out);
std::vector<RoundLog> read_rounds_csv(std::istream& in);
void write_sweep_csv(const std::vector<SweepPoint>& sweep, std::ostream& out);
std::string svg_line_plot(std::span<const double> xs, std::span<const double> ys, const std::string& title);

struct EmitOptions {
    bool svg = true;
    std::optional<RegretReport> regret;  // adds comparator columns to the summary
};

// rounds.csv, summary.csv, config_resolved.txt, optional avg_loss.svg.
void emit_outputs(const RunResult& result, const RunConfig& cfg, const std::string& out_dir,
                  const EmitOptions& opts = {});

}  // namespace ewlogit
