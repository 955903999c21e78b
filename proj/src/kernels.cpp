#include "cen/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#if defined(__x86_64__) || defined(_M_X64)
#define CEN_X86 1
#include <immintrin.h>
#else
#define CEN_X86 0
#endif

#if defined(__aarch64__) || defined(__ARM_NEON)
#define CEN_NEON 1
#include <arm_neon.h>
#else
#define CEN_NEON 0
#endif

namespace cen::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double max(const double* x, std::size_t n) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

}  // namespace scalar

#if CEN_X86
namespace avx2 {

static inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double r = hsum(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

double max(const double* x, std::size_t n) {
    std::size_t i = 0;
    double m = x[0];
    if (n >= 4) {
        __m256d vm = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, vm);
        m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    }
    for (; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

}  // namespace avx2
#endif

#if CEN_NEON
namespace neon {

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

double sum(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

double max(const double* x, std::size_t n) {
    double m = x[0];
    std::size_t i = 0;
    if (n >= 2) {
        float64x2_t vm = vld1q_f64(x);
        for (i = 2; i + 2 <= n; i += 2) vm = vmaxq_f64(vm, vld1q_f64(x + i));
        m = vmaxvq_f64(vm);
    }
    for (; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

}  // namespace neon
#endif

namespace {

bool lane_supported(Lane lane) {
    switch (lane) {
        case Lane::Scalar:
            return true;
        case Lane::Avx2:
#if CEN_X86
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Lane::Neon:
            return CEN_NEON != 0;
    }
    return false;
}

Lane pick_lane() {
    if (const char* env = std::getenv("CEN_SIMD")) {
        std::string s(env);
        if (s == "scalar") return Lane::Scalar;
        if (s == "avx2" && lane_supported(Lane::Avx2)) return Lane::Avx2;
        if (s == "neon" && lane_supported(Lane::Neon)) return Lane::Neon;
        return Lane::Scalar;
    }
    if (lane_supported(Lane::Avx2)) return Lane::Avx2;
    if (lane_supported(Lane::Neon)) return Lane::Neon;
    return Lane::Scalar;
}

Lane g_lane = pick_lane();

}  // namespace

Lane active_lane() { return g_lane; }

std::string lane_name(Lane lane) {
    switch (lane) {
        case Lane::Scalar: return "scalar";
        case Lane::Avx2: return "avx2";
        case Lane::Neon: return "neon";
    }
    return "?";
}

void set_lane(Lane lane) {
    if (!lane_supported(lane)) {
        throw std::runtime_error("SIMD lane not supported on this CPU: " + lane_name(lane));
    }
    g_lane = lane;
}

double dot(const double* a, const double* b, std::size_t n) {
#if CEN_X86
    if (g_lane == Lane::Avx2) return avx2::dot(a, b, n);
#endif
#if CEN_NEON
    if (g_lane == Lane::Neon) return neon::dot(a, b, n);
#endif
    return scalar::dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
#if CEN_X86
    if (g_lane == Lane::Avx2) return avx2::axpy(alpha, x, y, n);
#endif
#if CEN_NEON
    if (g_lane == Lane::Neon) return neon::axpy(alpha, x, y, n);
#endif
    scalar::axpy(alpha, x, y, n);
}

void scale(double alpha, double* x, std::size_t n) {
#if CEN_X86
    if (g_lane == Lane::Avx2) return avx2::scale(alpha, x, n);
#endif
#if CEN_NEON
    if (g_lane == Lane::Neon) return neon::scale(alpha, x, n);
#endif
    scalar::scale(alpha, x, n);
}

double sum(const double* x, std::size_t n) {
#if CEN_X86
    if (g_lane == Lane::Avx2) return avx2::sum(x, n);
#endif
#if CEN_NEON
    if (g_lane == Lane::Neon) return neon::sum(x, n);
#endif
    return scalar::sum(x, n);
}

double max(const double* x, std::size_t n) {
#if CEN_X86
    if (g_lane == Lane::Avx2) return avx2::max(x, n);
#endif
#if CEN_NEON
    if (g_lane == Lane::Neon) return neon::max(x, n);
#endif
    return scalar::max(x, n);
}

}  // namespace cen::kernels
