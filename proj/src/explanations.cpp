#include "cen/explanations.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cen/kernels.hpp"
#include "cen/numeric.hpp"

namespace cen {

LinearExplanation LinearExplanation::from_flat(const Vector& theta, std::size_t classes,
                                               std::size_t dim) {
    if (theta.size() != param_count(classes, dim)) {
        throw InvalidInput("LinearExplanation::from_flat: size mismatch");
    }
    LinearExplanation e(classes, dim);
    std::memcpy(e.weights.data(), theta.data(), classes * dim * sizeof(double));
    std::memcpy(e.bias.data(), theta.data() + classes * dim, classes * sizeof(double));
    return e;
}

Vector LinearExplanation::to_flat() const {
    Vector flat(param_count(classes(), dim()));
    std::memcpy(flat.data(), weights.data(), weights.size() * sizeof(double));
    std::memcpy(flat.data() + weights.size(), bias.data(), bias.size() * sizeof(double));
    return flat;
}

Vector linear_predict(const LinearExplanation& exp, const Vector& x) {
    Vector logits = matvec(exp.weights, x);
    kernels::axpy(1.0, exp.bias.data(), logits.data(), logits.size());
    return softmax(logits);
}

LinearNllResult linear_nll_grad(const LinearExplanation& exp, const Vector& x, std::size_t y) {
    if (y >= exp.classes()) throw InvalidInput("linear_nll_grad: class index out of range");
    Vector p = linear_predict(exp, x);
    LinearNllResult res;
    res.loss = -std::log(std::max(p[y], 1e-300));
    // d/dlogit = p - onehot(y)
    Vector d_logits = p;
    d_logits[y] -= 1.0;
    res.d_weights = Matrix(exp.classes(), exp.dim());
    outer_add(res.d_weights, 1.0, d_logits, x);
    res.d_bias = d_logits;
    res.d_theta.resize(LinearExplanation::param_count(exp.classes(), exp.dim()));
    std::memcpy(res.d_theta.data(), res.d_weights.data(), res.d_weights.size() * sizeof(double));
    std::memcpy(res.d_theta.data() + res.d_weights.size(), res.d_bias.data(),
                res.d_bias.size() * sizeof(double));
    return res;
}

SurvivalExplanation SurvivalExplanation::from_flat(const Vector& flat, std::size_t intervals,
                                                   std::size_t dim) {
    if (flat.size() != intervals * dim) {
        throw InvalidInput("SurvivalExplanation::from_flat: size mismatch");
    }
    SurvivalExplanation e(intervals, dim);
    std::memcpy(e.theta.data(), flat.data(), flat.size() * sizeof(double));
    return e;
}

Vector SurvivalExplanation::to_flat() const { return theta.values(); }

namespace {

// Unary + pairwise score of each monotone outcome sequence 0^j 1^(m-j).
Vector outcome_scores(const SurvivalExplanation& exp, const Vector& x) {
    if (x.size() != exp.dim()) throw InvalidInput("survival: attribute dim mismatch");
    const std::size_t m = exp.intervals();
    // unary suffix sums: s(j) = sum_{i=j+1..m} x.theta^i, s(m) = 0
    Vector s(m + 1, 0.0);
    for (std::size_t j = m; j-- > 0;) {
        s[j] = s[j + 1] + kernels::dot(exp.theta.row(j), x.data(), x.size());
    }
    // pairwise-potential contribution of each valid sequence
    for (std::size_t j = 0; j <= m; ++j) {
        const std::size_t zeros = j, ones = m - j;
        if (zeros >= 2) s[j] += static_cast<double>(zeros - 1) * exp.omega_00;
        if (zeros >= 1 && ones >= 1) s[j] += exp.omega_01;
        if (ones >= 2) s[j] += static_cast<double>(ones - 1) * exp.omega_11;
    }
    return s;
}

}  // namespace

Vector survival_log_probs(const SurvivalExplanation& exp, const Vector& x) {
    Vector s = outcome_scores(exp, x);
    const double z = log_sum_exp(s);
    for (double& v : s) v -= z;
    return s;
}

double survival_censored_logprob(const SurvivalExplanation& exp, const Vector& x, std::size_t j) {
    const std::size_t m = exp.intervals();
    if (j > m) throw InvalidInput("survival_censored_logprob: interval out of range");
    Vector s = outcome_scores(exp, x);
    const double z = log_sum_exp(s);
    const std::size_t lo = std::min(j + 1, m);  // j = m degenerates to the horizon outcome
    return log_sum_exp(s.data() + lo, m + 1 - lo) - z;
}

SurvivalGradResult survival_grad(const SurvivalExplanation& exp, const Vector& x,
                                 const SurvivalTarget& target) {
    const std::size_t m = exp.intervals();
    if (target.interval > m) throw InvalidInput("survival_grad: target interval out of range");
    Vector s = outcome_scores(exp, x);
    const double z = log_sum_exp(s);
    Vector p(m + 1);
    for (std::size_t k = 0; k <= m; ++k) p[k] = std::exp(s[k] - z);

    // dLoss/ds(k) = p(k) - q(k), q the conditional target distribution over outcomes
    Vector d_s = p;
    double loss;
    if (!target.censored) {
        loss = z - s[target.interval];
        d_s[target.interval] -= 1.0;
    } else {
        const std::size_t lo = std::min(target.interval + 1, m);
        const double tail = log_sum_exp(s.data() + lo, m + 1 - lo);
        loss = z - tail;
        for (std::size_t k = lo; k <= m; ++k) d_s[k] -= std::exp(s[k] - tail);
    }

    // s(k) depends on theta^i for i > k: dLoss/dtheta^i = (sum_{k < i} dLds(k)) x
    SurvivalGradResult res;
    res.loss = loss;
    res.d_theta = Matrix(m, exp.dim());
    double prefix = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
        prefix += d_s[i - 1];
        kernels::axpy(prefix, x.data(), res.d_theta.row(i - 1), x.size());
    }
    res.d_flat = res.d_theta.values();
    return res;
}

Vector survival_curve(const SurvivalExplanation& exp, const Vector& x) {
    Vector lp = survival_log_probs(exp, x);
    const std::size_t m = exp.intervals();
    Vector curve(m + 1);
    curve[0] = 1.0;
    // S(t_j) = sum_{k >= j} p(k), accumulated from the tail for stability
    double tail = 0.0;
    for (std::size_t j = m + 1; j-- > 1;) {
        tail += std::exp(lp[j]);
        curve[j] = std::min(tail, 1.0);
    }
    // enforce monotone non-increasing under float rounding
    for (std::size_t j = 1; j <= m; ++j) curve[j] = std::min(curve[j], curve[j - 1]);
    return curve;
}

std::size_t predicted_time(const SurvivalExplanation& exp, const Vector& x, TimeRule rule) {
    Vector lp = survival_log_probs(exp, x);
    const std::size_t m = exp.intervals();
    switch (rule) {
        case TimeRule::Median: {
            double cum = 0.0;
            for (std::size_t j = 0; j <= m; ++j) {
                cum += std::exp(lp[j]);
                if (cum >= 0.5) return j;
            }
            return m;
        }
        case TimeRule::Mean: {
            double mean = 0.0;
            for (std::size_t j = 0; j <= m; ++j) mean += static_cast<double>(j) * std::exp(lp[j]);
            return static_cast<std::size_t>(std::llround(mean));
        }
        case TimeRule::Argmax: {
            std::size_t best = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (lp[j] > lp[best]) best = j;
            }
            return best;
        }
    }
    return m;
}

}  // namespace cen
