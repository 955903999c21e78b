#pragma once

#include <cstddef>
#include <vector>

#include "cen/linalg.hpp"

namespace cen {

// Multinomial linear (logistic) explanation: p(y|x) = softmax(W x + b).
// Flattened theta layout: W row-major (classes x d), then b (classes).
struct LinearExplanation {
    Matrix weights;  // classes x d
    Vector bias;     // classes

    LinearExplanation() = default;
    LinearExplanation(std::size_t classes, std::size_t dim)
        : weights(classes, dim), bias(classes, 0.0) {}

    std::size_t classes() const { return bias.size(); }
    std::size_t dim() const { return weights.cols(); }

    static std::size_t param_count(std::size_t classes, std::size_t dim) {
        return classes * (dim + 1);
    }
    static LinearExplanation from_flat(const Vector& theta, std::size_t classes, std::size_t dim);
    Vector to_flat() const;
};

Vector linear_predict(const LinearExplanation& exp, const Vector& x);

struct LinearNllResult {
    double loss;
    Matrix d_weights;
    Vector d_bias;
    Vector d_theta;  // flattened, for chaining into an encoder
};

LinearNllResult linear_nll_grad(const LinearExplanation& exp, const Vector& x, std::size_t y);

// Linear-chain survival CRF over m intervals. Only the m+1 monotone label
// sequences 0^j 1^(m-j) carry probability; outcome j means the event falls in
// [t_j, t_{j+1}) (j = m: survived past the horizon).
//
// Outcome score: s(j) = sum_{i=j+1..m} x^T theta^i plus the pairwise-potential
// contribution of the sequence 0^j 1^(m-j); s(m)'s unary part is 0.
struct SurvivalExplanation {
    Matrix theta;  // m x d, row t-1 holds theta^t
    // pairwise potentials; omega(1,0) is structurally -inf
    double omega_00 = 0.0;
    double omega_01 = 0.0;
    double omega_11 = 0.0;

    SurvivalExplanation() = default;
    SurvivalExplanation(std::size_t intervals, std::size_t dim) : theta(intervals, dim) {}

    std::size_t intervals() const { return theta.rows(); }
    std::size_t dim() const { return theta.cols(); }

    static SurvivalExplanation from_flat(const Vector& flat, std::size_t intervals,
                                         std::size_t dim);
    Vector to_flat() const;  // theta row-major (omegas are not part of the flat layout)
};

struct SurvivalTarget {
    std::size_t interval = 0;  // j in {0..m}
    bool censored = false;     // censored: survived at least to t_j
};

// Log-probabilities of the m+1 outcomes.
Vector survival_log_probs(const SurvivalExplanation& exp, const Vector& x);

// log P(T >= t_j): tail over outcomes k > j (j = m degenerates to log p(m)).
double survival_censored_logprob(const SurvivalExplanation& exp, const Vector& x, std::size_t j);

struct SurvivalGradResult {
    double loss;      // negative log-likelihood of the target
    Matrix d_theta;   // m x d
    Vector d_flat;    // same values flattened
};

SurvivalGradResult survival_grad(const SurvivalExplanation& exp, const Vector& x,
                                 const SurvivalTarget& target);

// S(t_j) = P(T >= t_j) for j = 0..m; S(t_0) = 1 exactly.
Vector survival_curve(const SurvivalExplanation& exp, const Vector& x);

enum class TimeRule { Median, Mean, Argmax };

// Predicted outcome interval (median rule by default).
std::size_t predicted_time(const SurvivalExplanation& exp, const Vector& x,
                           TimeRule rule = TimeRule::Median);

}  // namespace cen
