#include "cen/posthoc.hpp"

#include <algorithm>
#include <cmath>

#include "cen/kernels.hpp"

namespace cen {

std::vector<PerturbedSample> perturb(const Vector& x, const Vector& c,
                                     const PerturbationConfig& cfg, Rng& rng) {
    validate_finite(x, "perturb x");
    validate_finite(c, "perturb c");
    std::vector<PerturbedSample> samples;
    samples.reserve(cfg.samples);
    double weight_sum = 0.0;
    const double sigma2 = cfg.kernel_width * cfg.kernel_width;
    for (std::size_t k = 0; k < cfg.samples; ++k) {
        PerturbedSample s;
        s.x = x;
        for (auto& v : s.x) v += cfg.x_scale * rng.normal();
        s.c = c;
        if (cfg.c_scale > 0.0) {
            for (auto& v : s.c) v += cfg.c_scale * rng.normal();
        }
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double diff = s.x[i] - x[i];
            d2 += diff * diff;
        }
        s.weight = std::exp(-d2 / sigma2);
        weight_sum += s.weight;
        samples.push_back(std::move(s));
    }
    // normalize to mean 1
    const double scale = static_cast<double>(samples.size()) / weight_sum;
    for (auto& s : samples) s.weight *= scale;
    return samples;
}

LocalSurrogate fit_surrogate(const BlackBox& f, const Vector& x, const Vector& c,
                             const PerturbationConfig& cfg, Rng& rng) {
    const std::size_t d = x.size();
    if (cfg.samples < d + 1) throw InvalidInput("fit_surrogate: need at least d+1 samples");
    auto samples = perturb(x, c, cfg, rng);

    const std::size_t n = samples.size();
    std::vector<Vector> feats(n);
    Vector targets(n);
    for (std::size_t k = 0; k < n; ++k) {
        feats[k] = sub(samples[k].x, x);  // centered so the intercept absorbs f at the point
        double p = f(samples[k].x, samples[k].c);
        if (cfg.target == SurrogateTarget::LogitMatch) {
            p = std::clamp(p, 1e-6, 1.0 - 1e-6);
            targets[k] = std::log(p / (1.0 - p));
        } else {
            targets[k] = p;
        }
    }

    // weighted ridge normal equations over [slope; intercept]; no penalty on
    // the intercept
    const std::size_t dim = d + 1;
    Matrix a(dim, dim);
    Vector b(dim, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = samples[k].weight;
        for (std::size_t i = 0; i < d; ++i) {
            kernels::axpy(w * feats[k][i], feats[k].data(), a.row(i), d);
            a(i, d) += w * feats[k][i];
            b[i] += w * feats[k][i] * targets[k];
        }
        for (std::size_t i = 0; i < d; ++i) a(d, i) += w * feats[k][i];
        a(d, d) += w;
        b[d] += w * targets[k];
    }
    for (std::size_t i = 0; i < d; ++i) a(i, i) += cfg.ridge * static_cast<double>(n);

    Vector sol = solve_linear(std::move(a), std::move(b));

    LocalSurrogate out;
    out.weights.assign(sol.begin(), sol.begin() + d);
    out.intercept = sol[d];

    // weighted R^2 and Kish effective sample size
    double w_sum = 0.0, w2_sum = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        w_sum += samples[k].weight;
        w2_sum += samples[k].weight * samples[k].weight;
        mean += samples[k].weight * targets[k];
    }
    mean /= w_sum;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double pred = dot(out.weights, feats[k]) + out.intercept;
        ss_res += samples[k].weight * (targets[k] - pred) * (targets[k] - pred);
        ss_tot += samples[k].weight * (targets[k] - mean) * (targets[k] - mean);
    }
    out.weighted_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    out.effective_samples = w_sum * w_sum / w2_sum;
    return out;
}

}  // namespace cen
