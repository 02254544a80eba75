#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ewlogit {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double sqnorm(std::span<const double> a) { return dot(a, a); }

// y += c*x
inline void axpy(double c, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline void scale(double c, std::span<double> x) {
    for (double& v : x) v *= c;
}

inline Vec scaled(std::span<const double> x, double c) {
    Vec out(x.begin(), x.end());
    for (double& v : out) v *= c;
    return out;
}

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline Vec unit(std::span<const double> a) {
    Vec out(a.begin(), a.end());
    const double n = norm2(a);
    if (n > 0.0)
        for (double& v : out) v /= n;
    return out;
}

}  // namespace ewlogit
