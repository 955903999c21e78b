#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cen/explanations.hpp"
#include "cen/linalg.hpp"
#include "cen/rng.hpp"

namespace cen::testutil {

inline Vector random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
    Vector v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

// Independent oracle for the survival chain CRF: enumerate all 2^m binary
// sequences, weight each by exp{sum_t y^t (x.theta^t) + sum_t omega(y^t, y^{t+1})}
// with omega(1,0) = -inf (weight 0), and normalize. Returns the probability of
// each of the m+1 valid outcomes j (= number of leading zeros).
inline Vector survival_bruteforce(const SurvivalExplanation& exp, const Vector& x) {
    const std::size_t m = exp.intervals();
    Vector unary(m);
    for (std::size_t t = 0; t < m; ++t) {
        unary[t] = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) unary[t] += exp.theta(t, i) * x[i];
    }
    Vector outcome_weight(m + 1, 0.0);
    double total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
        double score = 0.0;
        bool valid = true;
        for (std::size_t t = 0; t < m; ++t) {
            const bool y = (mask >> t) & 1;
            if (y) score += unary[t];
            if (t + 1 < m) {
                const bool y_next = (mask >> (t + 1)) & 1;
                if (y && !y_next) {
                    valid = false;  // omega(1,0) = -inf
                    break;
                }
                if (!y && !y_next) score += exp.omega_00;
                if (!y && y_next) score += exp.omega_01;
                if (y && y_next) score += exp.omega_11;
            }
        }
        if (!valid) continue;
        const double w = std::exp(score);
        total += w;
        // valid sequences are 0^j 1^(m-j): j = index of first 1, or m
        std::size_t j = m;
        for (std::size_t t = 0; t < m; ++t) {
            if ((mask >> t) & 1) {
                j = t;
                break;
            }
        }
        outcome_weight[j] += w;
    }
    for (auto& w : outcome_weight) w /= total;
    return outcome_weight;
}

}  // namespace cen::testutil
