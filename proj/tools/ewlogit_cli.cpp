// Command-line experiment runner: online logistic regression with the
// Gaussian-prior exponential-weights predictor (exact, theory-schedule MC,
// practical single-chain), the solid-angle voter, and OGD/ONS baselines.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ewlogit/data_io.hpp"
#include "ewlogit/harness.hpp"
#include "ewlogit/parallel.hpp"

namespace {

using namespace ewlogit;

std::map<std::string, std::string> parse_kv(const std::string& body) {
    std::map<std::string, std::string> kv;
    std::istringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("expected key=value in '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
}

Dataset resolve_dataset(const std::string& spec, bool normalize, std::size_t max_examples) {
    if (spec.empty()) throw CLI::ValidationError("--data is required (flag or config file)");
    if (spec.rfind("gen:", 0) == 0) {
        const std::string rest = spec.substr(4);
        const auto colon = rest.find(':');
        const std::string kind = colon == std::string::npos ? rest : rest.substr(0, colon);
        auto kv = colon == std::string::npos ? std::map<std::string, std::string>{}
                                             : parse_kv(rest.substr(colon + 1));
        auto geti = [&kv](const char* k, long def) {
            return kv.count(k) ? std::stol(kv.at(k)) : def;
        };
        auto getd = [&kv](const char* k, double def) {
            return kv.count(k) ? std::stod(kv.at(k)) : def;
        };
        if (kind == "hazan") {
            HazanConfig hc;
            hc.n = static_cast<int>(geti("n", 100));
            hc.B = getd("B", 0.0);
            hc.eps = getd("eps", 0.01);
            hc.chi = static_cast<int>(geti("chi", +1));
            hc.seed = static_cast<std::uint64_t>(geti("seed", 1));
            return gen_hazan(hc);
        }
        if (kind == "gauss") {
            GaussianDesignConfig gc;
            gc.n = static_cast<int>(geti("n", 100));
            gc.d = static_cast<int>(geti("d", 2));
            gc.seed = static_cast<std::uint64_t>(geti("seed", 1));
            const double bstar = getd("bstar", 0.0);
            if (bstar != 0.0) {
                gc.theta_star.assign(gc.d, 0.0);
                gc.theta_star[0] = bstar;
            }
            return gen_gaussian_design(gc);
        }
        throw CLI::ValidationError("unknown generator '" + kind + "' (use hazan or gauss)");
    }
    LibsvmOptions opts;
    opts.normalize = normalize;
    opts.max_examples = max_examples;
    return load_libsvm(spec, opts);
}

struct CommonArgs {
    std::string data_spec;
    std::string predictor = "ew-practical";
    double B = 1.0;
    long n = 0;
    std::uint64_t seed = 1;
    int repeats = 1;
    std::string out = "out";
    bool normalize = false;
    bool no_svg = false;
    bool with_comparator = false;
    std::string config_file;
    // overrides
    double alpha = -1, eps = -1, c_delta = -1, step_const = -1, exact_tol = -1, delta = 0.05;
    double accept_lo = -1, accept_hi = -1, target_accept = -1;
    long long s_chains = -1;
    int S = -1, burn_in = -1, thin = -1;
    long voter_mc = -1;
    bool no_ladder = false, asymptotic_h = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--data", a.data_spec, "LIBSVM path or gen:hazan:...,gen:gauss:...");
    cmd->add_option("--predictor", a.predictor, "ew-exact|ew-theory|ew-practical|solid-angle|ogd|ons");
    cmd->add_option("--B", a.B, "prior scale / comparator radius");
    cmd->add_option("--n", a.n, "rounds (0 = whole dataset)");
    cmd->add_option("--seed", a.seed, "master seed");
    cmd->add_option("--repeats", a.repeats, "independent permutation repeats");
    cmd->add_option("--out", a.out, "output directory");
    cmd->add_option("--config", a.config_file, "key=value config file (flags override)");
    cmd->add_flag("--normalize", a.normalize, "unit-normalize LIBSVM examples");
    cmd->add_flag("--no-svg", a.no_svg, "skip SVG plots");
    cmd->add_flag("--comparator", a.with_comparator, "also solve the B-ball comparator and report regret");
    cmd->add_option("--delta", a.delta, "failure budget of the theory schedule");
    cmd->add_option("--alpha", a.alpha, "smoothing override");
    cmd->add_option("--eps", a.eps, "fresh TV budget override");
    cmd->add_option("--chains", a.s_chains, "theory-mode chain count override");
    cmd->add_option("--c-delta", a.c_delta, "ladder rung width constant");
    cmd->add_option("--step-const", a.step_const, "N_rung schedule constant C");
    cmd->add_option("--S", a.S, "practical-mode retained samples");
    cmd->add_option("--burn-in", a.burn_in, "practical-mode burn-in");
    cmd->add_option("--thin", a.thin, "practical-mode thinning");
    cmd->add_flag("--no-ladder", a.no_ladder, "disable the tempered burn-in bridge");
    cmd->add_flag("--asymptotic-h", a.asymptotic_h, "use h = 1/(L sqrt d) instead of pilot adaptation");
    cmd->add_option("--voter-mc", a.voter_mc, "solid-angle MC samples per prediction");
    cmd->add_option("--exact-tol", a.exact_tol, "quadrature relative tolerance");
    cmd->add_option("--accept-lo", a.accept_lo, "pilot acceptance window, lower edge");
    cmd->add_option("--accept-hi", a.accept_hi, "pilot acceptance window, upper edge");
    cmd->add_option("--target-accept", a.target_accept,
                    "point acceptance target (narrows the window to +-0.03 around it)");
}

void apply_config_file(CommonArgs& a, CLI::App* cmd) {
    if (a.config_file.empty()) return;
    std::ifstream in(a.config_file);
    if (!in) throw CLI::ValidationError("cannot open config file " + a.config_file);
    std::string line;
    std::vector<std::string> argv_like;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(val);
        if (key.empty()) continue;
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (!opt) throw CLI::ValidationError("unknown config key '" + key + "'");
        // config values apply only where no flag was passed; force the
        // conversion callback since parsing has already happened
        if (cmd->count("--" + key) == 0) {
            opt->clear();
            opt->add_result(val);
            opt->run_callback();
        }
    }
}

RunConfig build_config(const CommonArgs& a) {
    RunConfig cfg;
    const auto kind = predictor_from_name(a.predictor);
    if (!kind) throw CLI::ValidationError("unknown predictor '" + a.predictor + "'");
    cfg.predictor = *kind;
    cfg.B = a.B;
    cfg.n = a.n > 0 ? static_cast<std::size_t>(a.n) : 0;
    cfg.seed = a.seed;
    cfg.delta = a.delta;
    auto& ov = cfg.overrides;
    if (a.alpha >= 0) ov.alpha = a.alpha;
    if (a.eps > 0) ov.eps = a.eps;
    if (a.s_chains > 0) ov.s = a.s_chains;
    if (a.c_delta > 0) ov.c_delta = a.c_delta;
    if (a.step_const > 0) ov.step_const = a.step_const;
    if (a.S > 0) ov.S = a.S;
    if (a.burn_in >= 0) ov.burn_in = a.burn_in;
    if (a.thin > 0) ov.thin = a.thin;
    if (a.no_ladder) ov.use_ladder = false;
    if (a.voter_mc > 0) ov.voter_mc = a.voter_mc;
    if (a.exact_tol > 0) ov.exact_tol = a.exact_tol;
    if (a.accept_lo > 0) ov.accept_lo = a.accept_lo;
    if (a.accept_hi > 0) ov.accept_hi = a.accept_hi;
    if (a.target_accept > 0) {
        ov.accept_lo = std::max(0.01, a.target_accept - 0.03);
        ov.accept_hi = std::min(0.99, a.target_accept + 0.03);
    }
    ov.use_asymptotic_h = a.asymptotic_h;
    return cfg;
}

double quantile7(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (v.size() - 1) * p;
    const std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - i) * (v[i + 1] - v[i]);
}

int cmd_run(const CommonArgs& a) {
    const Dataset base = resolve_dataset(a.data_spec, a.normalize,
                                         a.n > 0 ? static_cast<std::size_t>(a.n) : 0);
    const RunConfig cfg = build_config(a);
    std::filesystem::create_directories(a.out);

    std::optional<RegretReport> regret;
    if (a.with_comparator) {
        ComparatorOptions copts;
        copts.cache_dir = (std::filesystem::path(a.out) / "comparator_cache").string();
        const std::size_t T = std::min(cfg.n ? cfg.n : base.size(), base.size());
        regret = comparator_loss(base.head(T), cfg.B, copts);
    }

    std::vector<std::vector<RoundLog>> all_rounds;
    for (int rep = 0; rep < std::max(1, a.repeats); ++rep) {
        const Dataset data = a.repeats > 1 ? permute(base, cfg.seed + 31 * rep + 1) : base;
        RunConfig rc = cfg;
        rc.seed = cfg.seed + 7919 * rep;
        const RunResult res = run_online(data, rc);
        const std::string dir =
            a.repeats > 1 ? (std::filesystem::path(a.out) / ("rep" + std::to_string(rep))).string() : a.out;
        EmitOptions eo;
        eo.svg = !a.no_svg;
        eo.regret = regret;
        emit_outputs(res, rc, dir, eo);
        all_rounds.push_back(res.rounds);
        std::cout << "repeat " << rep << ": total loss " << res.total_loss;
        if (regret) std::cout << ", regret " << res.total_loss - regret->comparator_loss;
        std::cout << '\n';
    }

    if (a.repeats > 1) {
        // per-round median/IQR of the average loss across repeats
        std::ofstream out(std::filesystem::path(a.out) / "aggregate.csv", std::ios::binary);
        out << "t,median_avg_loss,q25,q75\n";
        const std::size_t T = all_rounds.front().size();
        char buf[40];
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<double> vals;
            for (const auto& rounds : all_rounds) vals.push_back(rounds[t].avg_loss);
            out << (t + 1);
            for (double q : {0.5, 0.25, 0.75}) {
                std::snprintf(buf, sizeof(buf), "%.17g", quantile7(vals, q));
                out << ',' << buf;
            }
            out << '\n';
        }
    }
    return 0;
}

int cmd_sweep(const CommonArgs& a, const std::string& grid_csv) {
    const Dataset base = resolve_dataset(a.data_spec, a.normalize,
                                         a.n > 0 ? static_cast<std::size_t>(a.n) : 0);
    const RunConfig cfg = build_config(a);
    std::vector<double> grid;
    std::istringstream gs(grid_csv);
    std::string tok;
    while (std::getline(gs, tok, ',')) grid.push_back(std::stod(tok));
    const auto sweep = sweep_B(base, cfg, grid, std::max(1, a.repeats));
    std::filesystem::create_directories(a.out);
    {
        std::ofstream out(std::filesystem::path(a.out) / "sweep.csv", std::ios::binary);
        write_sweep_csv(sweep, out);
    }
    if (!a.no_svg) {
        std::vector<double> xs, ys;
        for (const auto& pt : sweep) {
            xs.push_back(pt.B);
            ys.push_back(pt.median);
        }
        std::ofstream out(std::filesystem::path(a.out) / "sweep.svg", std::ios::binary);
        out << svg_line_plot(xs, ys, "median avg log-loss vs B");
    }
    for (const auto& pt : sweep)
        std::cout << "B=" << pt.B << " median=" << pt.median << " iqr=[" << pt.q25 << ", " << pt.q75
                  << "]\n";
    return 0;
}

int cmd_verify(std::uint64_t seed, const std::string& out_file) {
    const VerifyReport rep = verify_lemmas(seed);
    for (const auto& c : rep.checks)
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " (margin " << c.margin << ")\n";
    if (!out_file.empty()) {
        std::ofstream out(out_file, std::ios::binary);
        out << verify_report_json(rep) << '\n';
    }
    return rep.all_pass() ? 0 : 1;
}

int cmd_gen_data(const std::string& spec, const std::string& out_file) {
    const Dataset data = resolve_dataset(spec, false, 0);
    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw CLI::ValidationError("cannot write " + out_file);
    serialize_libsvm(data, out);
    std::cout << "wrote " << data.size() << " examples (d=" << data.d << ", R=" << data.R << ") to "
              << out_file << '\n';
    return 0;
}

int cmd_comparator(const CommonArgs& a, const std::string& cache_dir) {
    const Dataset data = resolve_dataset(a.data_spec, a.normalize,
                                         a.n > 0 ? static_cast<std::size_t>(a.n) : 0);
    ComparatorOptions copts;
    copts.cache_dir = cache_dir;
    const RegretReport rep = comparator_loss(data, a.B, copts);
    std::cout << "comparator loss " << rep.comparator_loss << " (|theta| " << norm2(rep.comparator_theta)
              << ", converged " << (rep.converged ? "yes" : "no") << ", iters " << rep.iterations << ")\n";
    return rep.converged ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"online logistic regression via Gaussian-prior exponential weights"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, cmp_args;
    std::string grid_csv = "1,2,5,10";
    std::uint64_t verify_seed = 1;
    std::string verify_out, gen_spec, gen_out, cmp_cache;

    CLI::App* run = app.add_subcommand("run", "single online run (optionally repeated over permutations)");
    add_common(run, run_args);

    CLI::App* sweep = app.add_subcommand("sweep-b", "average loss at round n across a grid of B values");
    add_common(sweep, sweep_args);
    sweep->add_option("--grid", grid_csv, "comma-separated B values")->required();

    CLI::App* verify = app.add_subcommand("verify", "run the lemma verification suite");
    std::string suite = "all";
    verify->add_option("--suite", suite, "check suite (all)");
    verify->add_option("--seed", verify_seed, "suite seed");
    verify->add_option("--out", verify_out, "machine-readable JSON report path");

    CLI::App* gen = app.add_subcommand("gen-data", "write a generated dataset as LIBSVM text");
    gen->add_option("--type", gen_spec, "gen:hazan:... or gen:gauss:... spec")->required();
    gen->add_option("--out", gen_out, "output file")->required();

    CLI::App* cmp = app.add_subcommand("comparator", "solve the B-ball comparator for a dataset");
    add_common(cmp, cmp_args);
    cmp->add_option("--cache", cmp_cache, "comparator cache directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            apply_config_file(run_args, run);
            return cmd_run(run_args);
        }
        if (sweep->parsed()) {
            apply_config_file(sweep_args, sweep);
            return cmd_sweep(sweep_args, grid_csv);
        }
        if (verify->parsed()) return cmd_verify(verify_seed, verify_out);
        if (gen->parsed()) return cmd_gen_data(gen_spec, gen_out);
        if (cmp->parsed()) return cmd_comparator(cmp_args, cmp_cache);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
