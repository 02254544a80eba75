#pragma once

#include <cmath>
#include <stdexcept>

namespace ewlogit {

// sigma(z) = 1/(1+e^{-z}), branched on sign so exp never overflows
inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// logistic loss at a signed score: -log sigma(z) = log(1+e^{-z})
inline double logistic_loss(double z) {
    if (z >= 0.0) return std::log1p(std::exp(-z));
    return -z + std::log1p(std::exp(z));
}

// d/dz [-log sigma(z)] = sigma(z) - 1, always in (-1, 0)
inline double loss_grad_scalar(double z) { return sigmoid(z) - 1.0; }

// smooth_alpha(p) = (1-alpha)p + alpha/2, shrinks toward 1/2
inline double smooth(double p, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 0.5)) throw std::invalid_argument("smooth: alpha outside [0, 1/2]");
    return (1.0 - alpha) * p + 0.5 * alpha;
}

}  // namespace ewlogit
