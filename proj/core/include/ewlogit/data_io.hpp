#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ewlogit/posterior.hpp"

namespace ewlogit {

enum class DataSource { LibsvmFile, Hazan1d, GaussianDesign, Synthetic };

struct Dataset {
    std::vector<LabeledExample> examples;
    std::size_t d = 0;
    double R = 0.0;  // max example norm, recomputed after any transform
    DataSource source = DataSource::Synthetic;

    std::size_t size() const { return examples.size(); }
    void recompute_radius();
    Dataset head(std::size_t n) const;  // first-n truncation
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LibsvmOptions {
    bool zero_label_as_minus = true;  // map a literal 0 label to -1
    bool normalize = false;           // per-example unit-norm scaling
    std::size_t max_examples = 0;     // 0 = no truncation
};

// Sparse "label idx:val idx:val" lines, 1-based indices; blank lines and
// '#' comments skipped. Labels {+1, 1} -> +1 and {-1, 0 (via flag)} -> -1;
// anything else is rejected with its line number.
Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts = {});
Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts = {});

// Canonical serialization: "+1"/"-1" label, ascending 1-based indices,
// zero entries skipped, values printed with round-trip precision.
void serialize_libsvm(const Dataset& data, std::ostream& out);
std::string serialize_libsvm(const Dataset& data);

// Two-point adversarial 1-D process:
//   (x, y) = (1 - sqrt(eps)/(2B), +1)  w.p. sqrt(eps)/(2B) + chi*eps/B,
//            (sqrt(eps)/(2B),     -1)  otherwise.
struct HazanConfig {
    int n = 100;
    double B = 0.0;     // <= 0 means the default B = log(n)
    double eps = 0.01;
    int chi = +1;       // +1 or -1
    std::uint64_t seed = 1;
};

Dataset gen_hazan(const HazanConfig& cfg);

// Well-specified logistic model: x ~ N(0, I_d), P(y = +1 | x) = sigma(<x, theta*>).
struct GaussianDesignConfig {
    int n = 100;
    int d = 2;
    Vec theta_star;  // |theta*| is the true scale
    std::uint64_t seed = 1;
};

Dataset gen_gaussian_design(const GaussianDesignConfig& cfg);

// Fisher-Yates permutation, deterministic per seed.
Dataset permute(const Dataset& data, std::uint64_t seed);

}  // namespace ewlogit
