#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops used by the linear algebra layer.
//
// Every kernel has a scalar reference implementation and, where the build
// target supports it, an AVX2 (or NEON) variant. The active lane is picked
// once at startup from CPU capabilities and can be forced with the
// CEN_SIMD environment variable ("scalar", "avx2", "neon").

namespace cen::kernels {

enum class Lane { Scalar, Avx2, Neon };

// Lane selected for this process.
Lane active_lane();
std::string lane_name(Lane lane);

// Force a lane (used by the equivalence tests). Throws if unsupported.
void set_lane(Lane lane);

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);  // y += alpha * x
void scale(double alpha, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
double max(const double* x, std::size_t n);  // n >= 1

// Scalar reference versions, always available (oracle for the SIMD lanes).
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
double max(const double* x, std::size_t n);
}  // namespace scalar

}  // namespace cen::kernels
