#include "ewlogit/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace ewlogit {

namespace {

GaussRule compute_legendre(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton on P_n from the Chebyshev-like initial guess
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        r.nodes[i] = -z;
        r.nodes[n - 1 - i] = z;
        r.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    return r;
}

GaussRule compute_hermite(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * r.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * r.nodes[1];
        } else {
            z = 2.0 * z - r.nodes[i - 2];
        }
        double pp = 0.0;
        for (int it = 0; it < 200; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(double(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        r.nodes[i] = z;                  // stored descending-to-ascending below
        r.weights[i] = 2.0 / (pp * pp);
    }
    // mirror to the full symmetric rule, ascending nodes
    GaussRule full;
    full.nodes.resize(n);
    full.weights.resize(n);
    for (int i = 0; i < m; ++i) {
        full.nodes[n - 1 - i] = r.nodes[i];
        full.weights[n - 1 - i] = r.weights[i];
        full.nodes[i] = -r.nodes[i];
        full.weights[i] = r.weights[i];
    }
    if (n % 2 == 1) full.nodes[n / 2] = 0.0;
    return full;
}

std::mutex rule_mutex;

}  // namespace

const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(rule_mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_legendre(n)).first;
    return it->second;
}

const GaussRule& gauss_hermite(int n) {
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(rule_mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_hermite(n)).first;
    return it->second;
}

namespace {

using Pair = std::array<double, 2>;

inline Pair padd(Pair a, Pair b) { return {a[0] + b[0], a[1] + b[1]}; }

struct SimpsonWorker {
    const PairFn& f;
    double abs_tol0, abs_tol1;  // per unit length
    int max_depth;
    double min_len;  // slivers below this are accepted; their mass is negligible
    bool failed = false;

    Pair simpson(double a, double b, Pair fa, Pair fm, Pair fb) const {
        const double h6 = (b - a) / 6.0;
        return {h6 * (fa[0] + 4.0 * fm[0] + fb[0]), h6 * (fa[1] + 4.0 * fm[1] + fb[1])};
    }

    Pair recurse(double a, double b, Pair fa, Pair fm, Pair fb, Pair whole, int depth) {
        const double m = 0.5 * (a + b);
        const Pair fl = f(0.5 * (a + m));
        const Pair fr = f(0.5 * (m + b));
        const Pair left = simpson(a, m, fa, fl, fm);
        const Pair right = simpson(m, b, fm, fr, fb);
        const Pair sum = padd(left, right);
        const double e0 = std::abs(sum[0] - whole[0]);
        const double e1 = std::abs(sum[1] - whole[1]);
        const double len = b - a;
        if ((e0 <= 15.0 * abs_tol0 * len && e1 <= 15.0 * abs_tol1 * len) || len <= min_len) {
            return {sum[0] + (sum[0] - whole[0]) / 15.0, sum[1] + (sum[1] - whole[1]) / 15.0};
        }
        if (depth >= max_depth) {
            failed = true;
            return {sum[0] + (sum[0] - whole[0]) / 15.0, sum[1] + (sum[1] - whole[1]) / 15.0};
        }
        return padd(recurse(a, m, fa, fl, fm, left, depth + 1), recurse(m, b, fm, fr, fb, right, depth + 1));
    }
};

}  // namespace

std::array<double, 2> integrate_pair_adaptive(const PairFn& f, double a, double b, double rel_tol,
                                              std::span<const double> knots, int max_depth,
                                              std::array<double, 2> abs_floor) {
    if (!(b > a)) return {0.0, 0.0};
    std::vector<double> edges;
    edges.push_back(a);
    for (double k : knots)
        if (k > a && k < b) edges.push_back(k);
    edges.push_back(b);

    // coarse pass to set the absolute tolerance scale
    struct Seg {
        double a, b;
        Pair fa, fm, fb, coarse;
    };
    std::vector<Seg> segs;
    Pair coarse_total{0.0, 0.0};
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        Seg s;
        s.a = edges[i];
        s.b = edges[i + 1];
        s.fa = f(s.a);
        s.fb = f(s.b);
        s.fm = f(0.5 * (s.a + s.b));
        const double h6 = (s.b - s.a) / 6.0;
        s.coarse = {h6 * (s.fa[0] + 4.0 * s.fm[0] + s.fb[0]), h6 * (s.fa[1] + 4.0 * s.fm[1] + s.fb[1])};
        coarse_total = padd(coarse_total, s.coarse);
        segs.push_back(s);
    }
    const double total_len = b - a;
    const double scale0 = std::max({std::abs(coarse_total[0]), abs_floor[0] / rel_tol, 1e-300});
    const double scale1 = std::max({std::abs(coarse_total[1]), abs_floor[1] / rel_tol, 1e-300});

    SimpsonWorker w{f, 0.1 * rel_tol * scale0 / total_len, 0.1 * rel_tol * scale1 / total_len, max_depth,
                    4e-14 * total_len};
    Pair total{0.0, 0.0};
    for (const Seg& s : segs) {
        total = padd(total, w.recurse(s.a, s.b, s.fa, s.fm, s.fb, s.coarse, 0));
    }
    if (w.failed) throw QuadratureError("integrate_pair_adaptive: depth cap hit before tolerance");
    return total;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                          std::span<const double> knots, int max_depth) {
    PairFn pf = [&f](double x) -> Pair {
        const double v = f(x);
        return {v, v};
    };
    return integrate_pair_adaptive(pf, a, b, rel_tol, knots, max_depth)[0];
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double normal_cdf_inv(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -INFINITY;
        if (p == 1.0) return INFINITY;
        throw std::invalid_argument("normal_cdf_inv: p outside [0,1]");
    }
    // Acklam's rational approximation, then one Halley polish step
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,  -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double bq[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double dq[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dq[0] * q + dq[1]) * q + dq[2]) * q + dq[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((bq[0] * r + bq[1]) * r + bq[2]) * r + bq[3]) * r + bq[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dq[0] * q + dq[1]) * q + dq[2]) * q + dq[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

namespace {

// graded offsets 0, 1, 2, 4, ... capped at halfwidth
std::vector<double> graded_edges(double halfwidth) {
    std::vector<double> neg, edges;
    double off = 1.0;
    std::vector<double> pos{0.0};
    while (pos.back() < halfwidth) {
        pos.push_back(std::min(off, halfwidth));
        off *= 2.0;
    }
    for (std::size_t i = pos.size(); i-- > 1;) edges.push_back(-pos[i]);
    for (double p : pos) edges.push_back(p);
    return edges;
}

// 2x2 (or 1x1) Cholesky, row-major
void chol2(std::span<const double> h, std::size_t d, double* L) {
    if (d == 1) {
        if (!(h[0] > 0.0)) throw QuadratureError("field Hessian not positive definite");
        L[0] = std::sqrt(h[0]);
        return;
    }
    if (!(h[0] > 0.0)) throw QuadratureError("field Hessian not positive definite");
    L[0] = std::sqrt(h[0]);
    L[1] = 0.0;
    L[2] = h[2] / L[0];
    const double t = h[3] - L[2] * L[2];
    if (!(t > 0.0)) throw QuadratureError("field Hessian not positive definite");
    L[3] = std::sqrt(t);
}

}  // namespace

std::vector<double> minimize_field(const Field& f, std::vector<double> init) {
    const std::size_t d = f.dim;
    std::vector<double> x = init.empty() ? std::vector<double>(d, 0.0) : std::move(init);
    std::vector<double> g(d), h(d * d), step(d);
    double fx = f.value(x);
    for (int it = 0; it < 200; ++it) {
        f.grad(x, g);
        double gn = 0.0;
        for (double v : g) gn = std::max(gn, std::abs(v));
        if (gn <= 1e-13 * std::max(1.0, std::abs(fx))) break;
        f.hess(x, h);
        if (d == 1) {
            step[0] = -g[0] / h[0];
        } else {
            const double det = h[0] * h[3] - h[1] * h[2];
            step[0] = -(h[3] * g[0] - h[1] * g[1]) / det;
            step[1] = -(-h[2] * g[0] + h[0] * g[1]) / det;
        }
        double dd = 0.0;
        for (std::size_t i = 0; i < d; ++i) dd += g[i] * step[i];
        if (dd > 0.0)
            for (std::size_t i = 0; i < d; ++i) step[i] = -g[i];  // fall back to steepest descent
        double t = 1.0;
        std::vector<double> xn(d);
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < d; ++i) xn[i] = x[i] + t * step[i];
            const double fn = f.value(xn);
            if (fn <= fx + 1e-4 * t * dd || fn < fx) {
                x = xn;
                fx = fn;
                break;
            }
            t *= 0.5;
        }
    }
    return x;
}

double log_weighted_integral(const Field& f, const std::function<double(std::span<const double>)>& weight,
                             double tail_scale, double rel_tol, const std::vector<double>* mode_hint) {
    const std::size_t d = f.dim;
    if (d < 1 || d > 2) throw QuadratureError("log_weighted_integral: dim must be 1 or 2");
    const std::vector<double> mode = minimize_field(f, mode_hint ? *mode_hint : std::vector<double>{});
    const double fm = f.value(mode);
    std::vector<double> h(d * d);
    f.hess(mode, h);
    double L[4] = {0, 0, 0, 0};
    chol2(h, d, L);
    // theta = mode + L^{-T} u; |u_i| <= ||L col_i|| * |theta - mode|
    double col0 = (d == 1) ? L[0] : std::hypot(L[0], L[2]);
    double col1 = (d == 1) ? 0.0 : std::abs(L[3]);
    const double hw0 = 16.0 + 12.0 * tail_scale * col0;
    const double hw1 = 16.0 + 12.0 * tail_scale * col1;
    const double log_jac = (d == 1) ? -std::log(L[0]) : -std::log(L[0] * L[3]);

    std::vector<double> theta(d);
    auto eval = [&](double u0, double u1) -> double {
        if (d == 1) {
            theta[0] = mode[0] + u0 / L[0];
        } else {
            // L^{-T} u: solve L^T t = u (L lower-triangular, so back-substitute)
            const double t1 = u1 / L[3];
            const double t0 = (u0 - L[2] * t1) / L[0];
            theta[0] = mode[0] + t0;
            theta[1] = mode[1] + t1;
        }
        const double e = std::exp(-(f.value(theta) - fm));
        return weight ? e * weight(theta) : e;
    };

    const std::vector<double> edges0 = graded_edges(hw0);
    const std::vector<double> edges1 = (d == 2) ? graded_edges(hw1) : std::vector<double>{0.0, 1.0};

    double prev = 0.0;
    for (int order = 8; order <= 512; order *= 2) {
        const GaussRule& gr = gauss_legendre(order);
        double total = 0.0;
        if (d == 1) {
            for (std::size_t p = 0; p + 1 < edges0.size(); ++p) {
                const double a = edges0[p], b = edges0[p + 1];
                const double c = 0.5 * (a + b), hlen = 0.5 * (b - a);
                double s = 0.0;
                for (int i = 0; i < order; ++i) s += gr.weights[i] * eval(c + hlen * gr.nodes[i], 0.0);
                total += s * hlen;
            }
        } else {
            if (order > 128) break;  // tensor cost cap; failure reported below
            for (std::size_t p = 0; p + 1 < edges0.size(); ++p) {
                const double a0 = edges0[p], b0 = edges0[p + 1];
                const double c0 = 0.5 * (a0 + b0), h0 = 0.5 * (b0 - a0);
                for (std::size_t q = 0; q + 1 < edges1.size(); ++q) {
                    const double a1 = edges1[q], b1 = edges1[q + 1];
                    const double c1 = 0.5 * (a1 + b1), h1 = 0.5 * (b1 - a1);
                    double s = 0.0;
                    for (int i = 0; i < order; ++i) {
                        const double u0 = c0 + h0 * gr.nodes[i];
                        double si = 0.0;
                        for (int j = 0; j < order; ++j) si += gr.weights[j] * eval(u0, c1 + h1 * gr.nodes[j]);
                        s += gr.weights[i] * si;
                    }
                    total += s * h0 * h1;
                }
            }
        }
        if (order > 8 && std::abs(total - prev) <= rel_tol * std::abs(total)) {
            if (!(total > 0.0)) throw QuadratureError("log_weighted_integral: nonpositive integral");
            return -fm + log_jac + std::log(total);
        }
        prev = total;
    }
    throw QuadratureError("log_weighted_integral: order cap hit before tolerance");
}

}  // namespace ewlogit
