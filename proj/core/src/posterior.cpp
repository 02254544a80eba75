#include "ewlogit/posterior.hpp"

#include <algorithm>
#include <cmath>

#include "ewlogit/quadrature.hpp"

namespace ewlogit {

std::shared_ptr<const PosteriorData> PosteriorData::make(std::span<const LabeledExample> examples,
                                                         double radius_check) {
    auto data = std::make_shared<PosteriorData>();
    if (examples.empty()) return data;
    data->d_ = examples.front().x.size();
    data->n_ = examples.size();
    data->rows_.resize(data->d_ * data->n_);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const LabeledExample& e = examples[i];
        if (e.x.size() != data->d_) throw std::invalid_argument("PosteriorData: inconsistent dimension");
        if (e.y != +1 && e.y != -1) throw std::invalid_argument("PosteriorData: label must be -1 or +1");
        const double nrm = norm2(e.x);
        if (radius_check > 0.0 && nrm > radius_check * (1.0 + 1e-12))
            throw std::invalid_argument("PosteriorData: example norm exceeds configured radius");
        data->max_norm_ = std::max(data->max_norm_, nrm);
        for (std::size_t j = 0; j < data->d_; ++j) data->rows_[i * data->d_ + j] = e.y * e.x[j];
    }
    return data;
}

PosteriorSpec make_posterior(std::shared_ptr<const PosteriorData> data, std::size_t prefix_len, double B,
                             double temper) {
    PosteriorSpec spec{std::move(data), prefix_len, B, temper};
    spec.validate();
    return spec;
}

namespace {

// Potential with an arbitrary weight on the last prefix row. Public ops use
// weight = spec.temper; the Renyi diagnostic also needs weight = v - dv,
// which may be negative.
struct WeightedPotential {
    const PosteriorSpec& spec;
    double last_weight;

    double value(std::span<const double> theta) const {
        double acc = 0.5 * sqnorm(theta) / (spec.B * spec.B);
        for (std::size_t i = 0; i < spec.prefix_len; ++i) {
            const double w = (i + 1 == spec.prefix_len) ? last_weight : 1.0;
            if (w == 0.0) continue;
            acc += w * logistic_loss(dot(spec.data->row(i), theta));
        }
        return acc;
    }

    void grad(std::span<const double> theta, std::span<double> out) const {
        const double inv_b2 = 1.0 / (spec.B * spec.B);
        for (std::size_t j = 0; j < theta.size(); ++j) out[j] = theta[j] * inv_b2;
        for (std::size_t i = 0; i < spec.prefix_len; ++i) {
            const double w = (i + 1 == spec.prefix_len) ? last_weight : 1.0;
            if (w == 0.0) continue;
            const auto row = spec.data->row(i);
            const double g = w * loss_grad_scalar(dot(row, theta));
            axpy(g, row, out);
        }
    }

    void hess(std::span<const double> theta, std::span<double> out) const {
        const std::size_t d = theta.size();
        const double inv_b2 = 1.0 / (spec.B * spec.B);
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t j = 0; j < d; ++j) out[j * d + j] = inv_b2;
        for (std::size_t i = 0; i < spec.prefix_len; ++i) {
            const double w = (i + 1 == spec.prefix_len) ? last_weight : 1.0;
            if (w == 0.0) continue;
            const auto row = spec.data->row(i);
            const double s = sigmoid(dot(row, theta));
            const double c = w * s * (1.0 - s);
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b) out[a * d + b] += c * row[a] * row[b];
        }
    }

    Field field() const {
        Field f;
        f.dim = std::max<std::size_t>(1, spec.dim());
        f.value = [this](std::span<const double> t) { return value(t); };
        f.grad = [this](std::span<const double> t, std::span<double> o) { grad(t, o); };
        f.hess = [this](std::span<const double> t, std::span<double> o) { hess(t, o); };
        return f;
    }
};

void check_dim(const PosteriorSpec& spec, std::span<const double> theta) {
    const std::size_t d = spec.data ? spec.data->dim() : theta.size();
    if (spec.prefix_len > 0 && theta.size() != d)
        throw std::invalid_argument("posterior: theta dimension mismatch");
}

}  // namespace

double potential(const PosteriorSpec& spec, std::span<const double> theta) {
    check_dim(spec, theta);
    return WeightedPotential{spec, spec.temper}.value(theta);
}

void grad_potential(const PosteriorSpec& spec, std::span<const double> theta, std::span<double> out) {
    check_dim(spec, theta);
    if (out.size() != theta.size()) throw std::invalid_argument("grad_potential: output size mismatch");
    WeightedPotential{spec, spec.temper}.grad(theta, out);
}

Vec grad_potential(const PosteriorSpec& spec, std::span<const double> theta) {
    Vec out(theta.size());
    grad_potential(spec, theta, out);
    return out;
}

void hess_potential(const PosteriorSpec& spec, std::span<const double> theta, std::span<double> out) {
    check_dim(spec, theta);
    WeightedPotential{spec, spec.temper}.hess(theta, out);
}

ConvexityConstants constants(const PosteriorSpec& spec, double R) {
    if (!(R > 0.0)) throw std::invalid_argument("constants: R must be > 0");
    ConvexityConstants c;
    c.m = 1.0 / (spec.B * spec.B);
    c.L = 0.25 * R * R * static_cast<double>(spec.prefix_len) + c.m;
    c.kappa = c.L / c.m;
    return c;
}

Vec potential_mode(const PosteriorSpec& spec, const Vec* hint) {
    WeightedPotential wp{spec, spec.temper};
    const Field f = wp.field();
    return minimize_field(f, hint ? *hint : Vec{});
}

double log_partition(const PosteriorSpec& spec, double rel_tol) {
    if (spec.dim() > 2) throw std::invalid_argument("log_partition: d <= 2 only");
    WeightedPotential wp{spec, spec.temper};
    return log_weighted_integral(wp.field(), nullptr, spec.B, rel_tol);
}

double renyi2_between_rungs(const PosteriorSpec& spec, double v, double dv, double rel_tol) {
    if (spec.dim() > 2) throw std::invalid_argument("renyi2_between_rungs: d <= 2 only");
    if (!(v >= 0.0 && dv >= 0.0 && v + dv <= 1.0 + 1e-12))
        throw std::invalid_argument("renyi2_between_rungs: need 0 <= v <= v+dv <= 1");
    if (dv == 0.0) return 0.0;

    // D2(rho_v || rho_{v+dv}) = log( Z_{v+dv} / Z_v^2 * \int f_v^2 / f_{v+dv} ),
    // where f_w is the unnormalized rung density and the ratio integrand is
    // itself exp of a weighted potential with last-row weight v - dv.
    WeightedPotential p_v{spec, v};
    WeightedPotential p_vdv{spec, v + dv};
    WeightedPotential p_ratio{spec, v - dv};
    const double log_zv = log_weighted_integral(p_v.field(), nullptr, spec.B, rel_tol);
    const double log_zvdv = log_weighted_integral(p_vdv.field(), nullptr, spec.B, rel_tol);
    const double log_a = log_weighted_integral(p_ratio.field(), nullptr, spec.B, rel_tol);
    const double d2 = log_a + log_zvdv - 2.0 * log_zv;
    return std::max(0.0, d2);
}

}  // namespace ewlogit
