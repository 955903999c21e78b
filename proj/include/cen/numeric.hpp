#pragma once

#include <functional>

#include "cen/linalg.hpp"

namespace cen {

// Max-shifted softmax. Entries must be finite; output sums to 1.
Vector softmax(const Vector& v);

// log(sum(exp(v))), max-shifted. v must be nonempty.
double log_sum_exp(const Vector& v);
double log_sum_exp(const double* v, std::size_t n);

// Central-difference gradient of a scalar field, the oracle every analytic
// gradient in this codebase is checked against.
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& p,
                   double eps = 1e-5);

// max_i |a_i - n_i| / (1 + |n_i|), the comparison used by gradient checks.
double max_rel_err(const Vector& analytic, const Vector& numeric);

}  // namespace cen
