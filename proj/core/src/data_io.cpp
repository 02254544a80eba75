#include "ewlogit/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ewlogit/rng.hpp"

namespace ewlogit {

void Dataset::recompute_radius() {
    R = 0.0;
    for (const auto& e : examples) R = std::max(R, norm2(e.x));
}

Dataset Dataset::head(std::size_t n) const {
    Dataset out;
    out.source = source;
    out.d = d;
    out.examples.assign(examples.begin(), examples.begin() + std::min(n, examples.size()));
    out.recompute_radius();
    return out;
}

namespace {

int parse_label(const std::string& tok, bool zero_as_minus, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw ParseError("libsvm: malformed label at line " + std::to_string(line_no));
    if (v == 1.0) return +1;
    if (v == -1.0) return -1;
    if (v == 0.0 && zero_as_minus) return -1;
    throw ParseError("libsvm: non-binary label at line " + std::to_string(line_no));
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts) {
    Dataset ds;
    ds.source = DataSource::LibsvmFile;
    std::string line;
    std::size_t line_no = 0;
    std::size_t max_index = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> sparse;
    std::vector<int> labels;

    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;  // blank line
        labels.push_back(parse_label(tok, opts.zero_label_as_minus, line_no));
        sparse.emplace_back();
        auto& row = sparse.back();
        while (ls >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
                throw ParseError("libsvm: malformed token '" + tok + "' at line " + std::to_string(line_no));
            char* end = nullptr;
            const long idx = std::strtol(tok.c_str(), &end, 10);
            if (end != tok.c_str() + colon || idx < 1)
                throw ParseError("libsvm: malformed index in '" + tok + "' at line " + std::to_string(line_no));
            const char* vstart = tok.c_str() + colon + 1;
            const double val = std::strtod(vstart, &end);
            if (end == vstart || *end != '\0')
                throw ParseError("libsvm: malformed value in '" + tok + "' at line " + std::to_string(line_no));
            if (!row.empty() && row.back().first >= static_cast<std::size_t>(idx))
                throw ParseError("libsvm: indices not increasing at line " + std::to_string(line_no));
            row.emplace_back(static_cast<std::size_t>(idx), val);
            max_index = std::max(max_index, static_cast<std::size_t>(idx));
        }
        if (opts.max_examples > 0 && labels.size() >= opts.max_examples) break;
    }

    ds.d = max_index;
    ds.examples.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        LabeledExample e;
        e.y = labels[i];
        e.x.assign(max_index, 0.0);
        for (const auto& [idx, val] : sparse[i]) e.x[idx - 1] = val;
        if (opts.normalize) {
            const double nrm = norm2(e.x);
            if (nrm > 0.0)
                for (double& v : e.x) v /= nrm;
        }
        ds.examples.push_back(std::move(e));
    }
    ds.recompute_radius();
    return ds;
}

Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ParseError("libsvm: cannot open '" + path + "'");
    return parse_libsvm(in, opts);
}

void serialize_libsvm(const Dataset& data, std::ostream& out) {
    char buf[48];
    for (const auto& e : data.examples) {
        out << (e.y > 0 ? "+1" : "-1");
        for (std::size_t j = 0; j < e.x.size(); ++j) {
            if (e.x[j] == 0.0) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", e.x[j]);
            out << ' ' << (j + 1) << ':' << buf;
        }
        out << '\n';
    }
}

std::string serialize_libsvm(const Dataset& data) {
    std::ostringstream out;
    serialize_libsvm(data, out);
    return out.str();
}

Dataset gen_hazan(const HazanConfig& cfg) {
    if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw std::invalid_argument("gen_hazan: eps must be in (0,1)");
    if (cfg.chi != +1 && cfg.chi != -1) throw std::invalid_argument("gen_hazan: chi must be +1 or -1");
    const double B = cfg.B > 0.0 ? cfg.B : std::log(static_cast<double>(cfg.n));
    const double root = std::sqrt(cfg.eps);
    const double p_plus = root / (2.0 * B) + cfg.chi * cfg.eps / B;
    if (!(p_plus > 0.0 && p_plus < 1.0))
        throw std::invalid_argument("gen_hazan: positive-class probability outside (0,1)");
    const double x_plus = 1.0 - root / (2.0 * B);
    const double x_minus = root / (2.0 * B);

    Dataset ds;
    ds.source = DataSource::Hazan1d;
    ds.d = 1;
    ds.examples.reserve(cfg.n);
    SplitMix64 rng(cfg.seed);
    for (int t = 0; t < cfg.n; ++t) {
        LabeledExample e;
        if (rng.next_double() < p_plus) {
            e.x = {x_plus};
            e.y = +1;
        } else {
            e.x = {x_minus};
            e.y = -1;
        }
        ds.examples.push_back(std::move(e));
    }
    ds.recompute_radius();
    return ds;
}

Dataset gen_gaussian_design(const GaussianDesignConfig& cfg) {
    if (cfg.d < 1) throw std::invalid_argument("gen_gaussian_design: d >= 1");
    if (!cfg.theta_star.empty() && cfg.theta_star.size() != static_cast<std::size_t>(cfg.d))
        throw std::invalid_argument("gen_gaussian_design: theta_star dimension mismatch");
    Dataset ds;
    ds.source = DataSource::GaussianDesign;
    ds.d = cfg.d;
    ds.examples.reserve(cfg.n);
    SplitMix64 rng(cfg.seed);
    for (int t = 0; t < cfg.n; ++t) {
        LabeledExample e;
        e.x.resize(cfg.d);
        for (double& v : e.x) v = rng.next_gaussian();
        const double z = cfg.theta_star.empty() ? 0.0 : dot(e.x, cfg.theta_star);
        e.y = (rng.next_double() < sigmoid(z)) ? +1 : -1;
        ds.examples.push_back(std::move(e));
    }
    ds.recompute_radius();
    return ds;
}

Dataset permute(const Dataset& data, std::uint64_t seed) {
    Dataset out = data;
    SplitMix64 rng(seed);
    for (std::size_t i = out.examples.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_double() * i);
        std::swap(out.examples[i - 1], out.examples[std::min(j, i - 1)]);
    }
    return out;
}

}  // namespace ewlogit
