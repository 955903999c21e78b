#include "cen/linalg.hpp"

#include <cmath>
#include <utility>

#include "cen/kernels.hpp"

namespace cen {

Matrix::Matrix(std::size_t rows, std::size_t cols, Vector data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw InvalidInput("Matrix: data size does not match dimensions");
    }
}

Vector matvec(const Matrix& a, const Vector& x) {
    if (x.size() != a.cols()) throw InvalidInput("matvec: dimension mismatch");
    Vector y(a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        y[r] = kernels::dot(a.row(r), x.data(), a.cols());
    }
    return y;
}

Vector matvec_t(const Matrix& a, const Vector& x) {
    if (x.size() != a.rows()) throw InvalidInput("matvec_t: dimension mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        kernels::axpy(x[r], a.row(r), y.data(), a.cols());
    }
    return y;
}

void outer_add(Matrix& a, double alpha, const Vector& u, const Vector& v) {
    if (u.size() != a.rows() || v.size() != a.cols()) {
        throw InvalidInput("outer_add: dimension mismatch");
    }
    for (std::size_t r = 0; r < a.rows(); ++r) {
        kernels::axpy(alpha * u[r], v.data(), a.row(r), a.cols());
    }
}

Vector add(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidInput("add: dimension mismatch");
    Vector r = a;
    kernels::axpy(1.0, b.data(), r.data(), r.size());
    return r;
}

Vector sub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidInput("sub: dimension mismatch");
    Vector r = a;
    kernels::axpy(-1.0, b.data(), r.data(), r.size());
    return r;
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidInput("dot: dimension mismatch");
    return kernels::dot(a.data(), b.data(), a.size());
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

void validate_finite(const Vector& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw InvalidInput(std::string("non-finite value in ") + what);
        }
    }
}

void validate_finite(const Matrix& m, const char* what) { validate_finite(m.values(), what); }

Vector solve_linear(Matrix a, Vector b) {
    if (a.rows() != a.cols() || b.size() != a.rows()) {
        throw InvalidInput("solve_linear: dimension mismatch");
    }
    const std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
        }
        if (std::fabs(a(piv, col)) < 1e-12) {
            throw SingularFit("solve_linear: singular system");
        }
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(piv, c));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
        x[i] = s / a(i, i);
    }
    return x;
}

}  // namespace cen
