#pragma once

#include <cstddef>
#include <vector>

#include "cen/errors.hpp"

namespace cen {

using Vector = std::vector<double>;

// Row-major dense matrix. Dimensions are fixed at construction.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, Vector data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const Vector& values() const { return data_; }
    Vector& values() { return data_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    Vector data_;
};

// y = A x
Vector matvec(const Matrix& a, const Vector& x);
// y = A^T x
Vector matvec_t(const Matrix& a, const Vector& x);
// A += alpha * u v^T
void outer_add(Matrix& a, double alpha, const Vector& u, const Vector& v);

Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);

// Throws InvalidInput if any entry is NaN/Inf.
void validate_finite(const Vector& v, const char* what);
void validate_finite(const Matrix& m, const char* what);

// Solves A x = b by Gaussian elimination with partial pivoting.
// A must be square; throws SingularFit when a pivot vanishes.
Vector solve_linear(Matrix a, Vector b);

}  // namespace cen
