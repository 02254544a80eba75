#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ewlogit {

// In-place Cholesky of a row-major SPD matrix (lower factor kept, strict
// upper left untouched). Returns false when the matrix is not positive
// definite to working precision.
inline bool cholesky(std::vector<double>& a, std::size_t d) {
    for (std::size_t j = 0; j < d; ++j) {
        double diag = a[j * d + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
        if (!(diag > 0.0)) return false;
        const double lj = std::sqrt(diag);
        a[j * d + j] = lj;
        for (std::size_t i = j + 1; i < d; ++i) {
            double s = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * d + k] * a[j * d + k];
            a[i * d + j] = s / lj;
        }
    }
    return true;
}

// Solves L L^T x = b given the factor from cholesky(); b is overwritten.
inline void cholesky_solve(const std::vector<double>& L, std::size_t d, std::span<double> b) {
    for (std::size_t i = 0; i < d; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= L[i * d + k] * b[k];
        b[i] = s / L[i * d + i];
    }
    for (std::size_t i = d; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < d; ++k) s -= L[k * d + i] * b[k];
        b[i] = s / L[i * d + i];
    }
}

}  // namespace ewlogit
