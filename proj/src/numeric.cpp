#include "cen/numeric.hpp"

#include <cmath>
#include <limits>

#include "cen/kernels.hpp"

namespace cen {

Vector softmax(const Vector& v) {
    if (v.empty()) throw InvalidInput("softmax: empty vector");
    validate_finite(v, "softmax input");
    const double m = kernels::max(v.data(), v.size());
    Vector out(v.size());
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        z += out[i];
    }
    kernels::scale(1.0 / z, out.data(), out.size());
    return out;
}

double log_sum_exp(const double* v, std::size_t n) {
    if (n == 0) throw InvalidInput("log_sum_exp: empty vector");
    const double m = kernels::max(v, n);
    if (!std::isfinite(m)) {
        // all -inf stays -inf; a NaN or +inf is a caller bug
        if (m == -std::numeric_limits<double>::infinity()) return m;
        throw InvalidInput("log_sum_exp: non-finite input");
    }
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(v[i] - m);
    return m + std::log(z);
}

double log_sum_exp(const Vector& v) { return log_sum_exp(v.data(), v.size()); }

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& p, double eps) {
    Vector g(p.size());
    Vector q = p;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = q[i];
        q[i] = orig + eps;
        const double fp = f(q);
        q[i] = orig - eps;
        const double fm = f(q);
        q[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw InvalidInput("fd_gradient: non-finite function value");
        }
        g[i] = (fp - fm) / (2.0 * eps);
    }
    return g;
}

double max_rel_err(const Vector& analytic, const Vector& numeric) {
    if (analytic.size() != numeric.size()) throw InvalidInput("max_rel_err: size mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        double e = std::fabs(analytic[i] - numeric[i]) / (1.0 + std::fabs(numeric[i]));
        worst = std::max(worst, e);
    }
    return worst;
}

}  // namespace cen
